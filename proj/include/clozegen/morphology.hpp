#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clozegen/word_group.hpp"

namespace cloze::morph {

/// One lexicon record. Families say which paradigms the headword has;
/// `overrides` replaces the rule output for a single tag.
struct LexiconEntry {
    std::string headword;
    bool noun = false;
    bool verb = false;
    bool adjective = false;
    bool adverb = false;
    bool countable = true;
    std::optional<bool> double_final;  // consonant doubling before -ed/-ing/-er
    std::optional<bool> graded;        // has comparative/superlative forms
    std::map<PosTag, FormSet> overrides;
};

/// Line-oriented lexicon:
///
///   # comment
///   <headword> pos=noun,verb [countable=no] [double=yes|no] [graded=yes|no] [TAG=form|form ...]
///
/// Headwords are unique; later duplicates are an error.
class Lexicon {
public:
    static Lexicon parse(std::string_view text);
    static Lexicon load(const std::string& path);
    /// The lexicon compiled into the library (AWL sublist 1 plus common
    /// irregular words).
    static const Lexicon& bundled();

    const LexiconEntry* find(std::string_view headword) const;
    const std::vector<LexiconEntry>& entries() const { return entries_; }

private:
    std::vector<LexiconEntry> entries_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

struct TagResult {
    PosTagSet tags;
    bool low_confidence = false;  // guessed from suffix rules, not the lexicon
};

struct LemmaResult {
    std::string lemma;
    bool in_lexicon = false;
};

struct ConsensusReport {
    std::string headword;
    PosTagSet accepted;
    PosTagSet rejected_primary_only;
    PosTagSet rejected_secondary_only;
};

/// Throws Error(EmptyConsensus) when the two taggers share no tag.
ConsensusReport consensus_tags(const std::string& headword, const PosTagSet& primary,
                               const PosTagSet& secondary);

/// Independent tagger used for cross-validation.
using SecondaryTagger = std::function<PosTagSet(std::string_view headword)>;

/// Pure after construction; safe for concurrent reads.
class Morphology {
public:
    explicit Morphology(Lexicon lexicon);
    Morphology();  // bundled lexicon

    /// Throws Error(UnknownWord) when neither lexicon nor rules apply.
    TagResult tag_pos(std::string_view headword) const;

    /// Throws Error(TagNotApplicable) when tag is not in tag_pos(headword).
    FormSet inflect(std::string_view headword, PosTag tag) const;

    /// Total: unknown surfaces come back unchanged with in_lexicon = false.
    LemmaResult lemma_of(std::string_view surface, PosTag tag) const;

    /// Full paradigm for the headword, all applicable tags.
    std::map<PosTag, FormSet> paradigm(std::string_view headword) const;

    WordGroup build_word_group(const HeadwordEntry& entry, const SecondaryTagger& secondary) const;
    /// Same, without cross-validation.
    WordGroup build_word_group(const HeadwordEntry& entry) const;

    const Lexicon& lexicon() const { return lexicon_; }

private:
    std::map<PosTag, FormSet> paradigm_for(const LexiconEntry& entry) const;
    std::optional<LexiconEntry> guess(std::string_view word) const;

    Lexicon lexicon_;
    std::map<std::pair<std::string, PosTag>, std::string> lemma_index_;
};

/// Secondary tagger backed by a "headword TAG TAG ..." fixture file.
class FixtureTagger {
public:
    static FixtureTagger parse(std::string_view text);
    static FixtureTagger load(const std::string& path);

    PosTagSet operator()(std::string_view headword) const;

private:
    std::map<std::string, PosTagSet, std::less<>> tags_;
};

// Rule helpers, exposed for tests.
std::string plural_of(std::string_view noun);
std::string third_person_of(std::string_view verb);
std::string past_of(std::string_view verb, bool double_final);
std::string gerund_of(std::string_view verb, bool double_final);
std::pair<std::string, std::string> comparative_of(std::string_view adjective, bool double_final);
int syllable_count(std::string_view word);
/// Monosyllabic consonant-vowel-consonant ending (stop, plan, big).
bool doubles_by_default(std::string_view word);
/// Latin -ae plurals, and -i plurals of -us nouns.
bool is_latin_plural(std::string_view form, std::string_view headword);

}  // namespace cloze::morph
