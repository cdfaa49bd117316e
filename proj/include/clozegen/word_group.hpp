#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "clozegen/pos_tag.hpp"

namespace cloze {

struct HeadwordEntry {
    std::string headword;
    int sublist_id = 1;

    bool operator==(const HeadwordEntry&) const = default;
};

using FormSet = std::set<std::string>;

/// A headword together with its inflected forms, keyed by tag.
struct WordGroup {
    std::string headword;
    int sublist_id = 1;
    std::map<PosTag, FormSet> inflections;

    bool operator==(const WordGroup&) const = default;

    bool has_tag(PosTag tag) const { return inflections.count(tag) != 0; }
    PosTagSet tags() const;
};

/// Ordered collection of word groups, one per headword. Insertion order is
/// preserved so seeded runs are reproducible.
struct WordGroupSet {
    std::vector<WordGroup> groups;
    std::string source_label;

    // source_label is provenance only and is not part of equality.
    bool operator==(const WordGroupSet& other) const { return groups == other.groups; }

    const WordGroup* find(const std::string& headword) const;
    std::size_t size() const { return groups.size(); }
    bool empty() const { return groups.empty(); }
};

/// One chosen surface form with its tag and source headword.
struct TaggedKey {
    std::string surface;
    PosTag tag = PosTag::NN;
    std::string headword;

    bool operator==(const TaggedKey&) const = default;
};

}  // namespace cloze
