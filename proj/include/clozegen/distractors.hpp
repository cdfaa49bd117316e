#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "clozegen/llm_gateway.hpp"
#include "clozegen/rng.hpp"
#include "clozegen/stem.hpp"
#include "clozegen/word_group.hpp"

namespace cloze::morph {
class Morphology;
}

namespace cloze::distractors {

inline constexpr std::size_t kDistractorsPerItem = 3;

struct CandidatePool {
    TaggedKey key;
    std::vector<TaggedKey> candidates;  // same tag as key, one per other group
    bool exhausted = false;
};

struct JudgmentVerdict {
    std::string word;
    bool syntax_ok = false;
    bool semantics_ok = false;

    bool operator==(const JudgmentVerdict&) const = default;
};

struct DistractorSet {
    std::vector<TaggedKey> distractors;  // at most 3, lemma-distinct
    int shortfall = 0;                   // 3 - distractors.size()
    int rounds_used = 0;
    bool depleted = false;  // the same-tag pool ran dry
};

/// Samples up to `size` candidates sharing the key's tag from groups other
/// than the key's, skipping groups with a form in `already_tried`. The
/// sample is drawn at random and listed in word-group order.
/// exhausted is set when fewer than `size` candidates remained.
CandidatePool draw_pool(const TaggedKey& key, const WordGroupSet& groups, std::size_t size, Rng& rng,
                        const std::set<std::string>& already_tried, const morph::Morphology* morphology = nullptr);

/// Batched judgment prompt: comma-separated words and the masked sentence,
/// each in triple backticks, followed by the JSON answer schema.
std::string build_judgment_prompt(const stem::QuestionStem& stem, const CandidatePool& pool);

/// Variant that lists every candidate inside the complete sentence.
std::string build_whole_sentence_prompt(const stem::QuestionStem& stem, const CandidatePool& pool);

/// One verdict per pool candidate, in pool order. Throws MalformedJson,
/// NoJsonFound, MissingVerdict or NonBooleanField.
std::vector<JudgmentVerdict> parse_verdicts(std::string_view raw, const CandidatePool& pool);
std::vector<JudgmentVerdict> interpret_verdicts(const nlohmann::json& value, const CandidatePool& pool);

/// syntax_ok && !semantics_ok, input order preserved.
std::vector<std::string> filter_good(const std::vector<JudgmentVerdict>& verdicts);

struct SelectionOptions {
    std::size_t pool_size = 10;
    int max_rounds = 6;
    bool whole_sentence = false;
    const morph::Morphology* morphology = nullptr;
};

/// Rounds of draw -> judge -> filter until three good distractors have
/// accumulated, the pool is depleted, or max_rounds is reached. Never
/// invents distractors; gateway errors propagate.
DistractorSet select_distractors(const stem::QuestionStem& stem, const TaggedKey& key, const WordGroupSet& groups,
                                 llm::Gateway& gateway, Rng& rng, const SelectionOptions& options = {});

}  // namespace cloze::distractors
