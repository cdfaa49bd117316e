#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "clozegen/llm_gateway.hpp"
#include "clozegen/stem.hpp"
#include "clozegen/word_group.hpp"

namespace cloze::morph {
class Morphology;
}

namespace cloze::pipeline {

enum class TransportKind { Live, Replay };

struct RunConfig {
    std::string wordlist_path;  // word-group CSV, or a raw headword list
    int item_threshold = 60;
    std::uint64_t seed = 0;
    stem::StemConstraints stem_constraints;
    int pool_size = 10;
    int max_rounds = 6;
    int stem_attempts = 3;
    TransportKind transport = TransportKind::Live;
    std::string output_path = "output.csv";
    std::string log_path = "log.csv";
    int parallelism = 1;

    std::string transcripts_path;  // replay input
    std::string record_path;       // when set, successful exchanges are saved here as JSONL
    bool mask_timestamps = false;
    bool whole_sentence = false;
    bool llm_pos_check = false;

    std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-3.5-turbo";
    std::string api_key_env = "CLOZEGEN_API_KEY";
    double timeout_seconds = 60.0;
    double temperature = 0.0;
    int max_output_tokens = 512;
    int retry_attempts = 3;
    int backoff_ms = 250;

    /// Throws Error(ConfigError). `group_count` bounds item_threshold.
    void validate(std::size_t group_count) const;
};

/// Sets one key (same spelling as the long CLI flag, '-' or '_').
/// Throws Error(ConfigError) for an unknown key or a bad value.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// key=value lines, '#' comments.
void apply_config_text(RunConfig& config, std::string_view text);
void apply_config_file(RunConfig& config, const std::string& path);

inline constexpr std::string_view kNotAvailable = "N/A";

struct QuestionItem {
    int item_id = 0;
    std::string headword;
    int sublist_id = 0;
    stem::QuestionStem stem;
    TaggedKey key;
    std::array<std::optional<TaggedKey>, 3> distractors;
    int attempts_used = 0;
    int rounds_used = 0;

    int shortfall() const;
};

struct RunSummary {
    int items_written = 0;
    std::size_t llm_calls = 0;
    std::int64_t duration_ms = 0;
    int shortfalls = 0;  // missing distractor slots
    int items_with_shortfall = 0;
    int stem_retries = 0;
    std::vector<std::string> exhausted_headwords;
    int exit_code = 0;

    nlohmann::ordered_json to_json() const;
};

struct RunResult {
    std::vector<QuestionItem> items;
    RunSummary summary;
};

/// Core loop against an existing gateway. Headwords are taken in file order
/// until item_threshold items exist; each gets a generator forked from the
/// seed by its group index. Gateway failures propagate.
RunResult generate(const RunConfig& config, const WordGroupSet& groups, llm::Gateway& gateway,
                   const morph::Morphology& morphology);

/// Loads the word groups, builds the transport, runs generate(), and writes
/// the output and log CSVs. The log is written even when a transport
/// failure aborts the run (the error is rethrown afterwards).
RunSummary run_pipeline(const RunConfig& config);

/// Builds the transport named by the config (replay or live).
std::unique_ptr<llm::Transport> make_transport(const RunConfig& config);

WordGroupSet load_groups(const std::string& path, const morph::Morphology& morphology);

inline constexpr std::string_view kOutputHeader =
    "item_id,headword,sublist,key,key_pos,stem,distractor_1,distractor_2,distractor_3";

std::string format_output_csv(const std::vector<QuestionItem>& items);
void write_output_csv(const std::vector<QuestionItem>& items, const std::string& path);
void write_log_csv(const std::vector<llm::LogRecord>& records, const std::string& path, bool mask_timestamps);

/// One row of an output file as read back (review service, tests).
struct OutputRow {
    int item_id = 0;
    std::string headword;
    int sublist_id = 0;
    std::string key;
    std::string key_pos;
    std::string stem;
    std::array<std::string, 3> distractors;  // "N/A" kept verbatim
};

/// Throws Error(MalformedOutputFile).
std::vector<OutputRow> parse_output_csv(std::string_view text);
std::vector<OutputRow> read_output_csv(const std::string& path);

}  // namespace cloze::pipeline
