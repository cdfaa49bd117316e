#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "clozegen/rng.hpp"
#include "clozegen/word_group.hpp"

namespace cloze::stem {

inline constexpr std::string_view kBlank = "____";

struct StemConstraints {
    int max_words = 20;
    std::string domain_label = "Academic English";
    bool forbid_initial_position = true;
    int max_key_occurrences = 1;

    /// Throws Error(ConfigError) when max_words < 5.
    void validate() const;
};

/// Model output with the backticks removed; key_begin/key_end index
/// full_text.
struct GeneratedSentence {
    std::string full_text;
    std::string key_surface;
    std::size_t key_begin = 0;
    std::size_t key_end = 0;
};

struct QuestionStem {
    std::string text_with_blank;
    TaggedKey key;
    int word_count = 0;
};

enum class Violation {
    KeyMissing,
    KeyAtStart,
    KeyAltered,
    KeyDuplicated,
    TooLong,
    PosMismatch,
    NoBackticks,
};

std::string_view to_string(Violation v);

struct ViolationEntry {
    Violation code;
    std::string message;
};

struct StemValidationReport {
    std::vector<ViolationEntry> violations;

    bool passed() const { return violations.empty(); }
    bool has(Violation v) const;
    std::string summary() const;  // "KEY_AT_START;TOO_LONG"
};

/// Uniform tag, then uniform form within the tag; driven only by rng.
TaggedKey pick_key(const WordGroup& group, Rng& rng);

/// Instantiates the stem-generation template.
std::string build_stem_prompt(const TaggedKey& key, const StemConstraints& constraints);

/// Throws NoBackticks (no delimited segment) or MultipleKeys (more than one).
GeneratedSentence parse_sentence(std::string_view raw);

/// Mechanical checks of a parsed sentence against the requested key.
/// `group`, when given, enables the lexicon-based POS_MISMATCH check.
StemValidationReport validate_stem(const GeneratedSentence& sentence, const TaggedKey& requested,
                                   const StemConstraints& constraints, const WordGroup* group = nullptr);

/// parse_sentence + validate_stem for a raw response. Unparseable
/// responses are reported (NO_BACKTICKS / KEY_MISSING) instead of thrown.
StemValidationReport check_response(std::string_view raw, const TaggedKey& requested,
                                    const StemConstraints& constraints, const WordGroup* group = nullptr);

/// Replaces the key span by kBlank. The returned stem's key keeps the
/// requested tag/headword with the surface as written in the sentence.
QuestionStem blank_out(const GeneratedSentence& sentence, const TaggedKey& requested);

/// Inverse of blank_out: puts `word` back at the blank.
std::string fill_blank(std::string_view text_with_blank, std::string_view word);

/// Prompt asking the model to confirm the key keeps its tag (optional check).
std::string build_pos_check_prompt(const GeneratedSentence& sentence, PosTag tag);

int word_count(std::string_view sentence);

}  // namespace cloze::stem
