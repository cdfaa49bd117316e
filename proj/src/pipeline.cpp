#include "clozegen/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "clozegen/csv.hpp"
#include "clozegen/distractors.hpp"
#include "clozegen/error.hpp"
#include "clozegen/morphology.hpp"
#include "clozegen/rng.hpp"
#include "clozegen/text.hpp"
#include "clozegen/wordlist.hpp"

namespace cloze::pipeline {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value)
{
    throw Error(Errc::ConfigError, "invalid value '" + std::string(value) + "' for " + std::string(key));
}

template <typename T>
T parse_int(std::string_view key, std::string_view value)
{
    T out{};
    const auto s = text::trim(value);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        bad_value(key, value);
    return out;
}

double parse_double(std::string_view key, std::string_view value)
{
    const auto s = text::trim(value);
    try {
        std::size_t used = 0;
        double d = std::stod(s, &used);
        if (used != s.size())
            bad_value(key, value);
        return d;
    } catch (const std::logic_error&) {
        bad_value(key, value);
    }
}

bool parse_bool(std::string_view key, std::string_view value)
{
    const auto s = text::to_lower(text::trim(value));
    if (s == "1" || s == "true" || s == "yes" || s == "on")
        return true;
    if (s == "0" || s == "false" || s == "no" || s == "off")
        return false;
    bad_value(key, value);
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters()
{
    static const std::map<std::string, Setter, std::less<>> table = {
        {"wordlist", [](RunConfig& c, auto, auto v) { c.wordlist_path = text::trim(v); }},
        {"threshold", [](RunConfig& c, auto k, auto v) { c.item_threshold = parse_int<int>(k, v); }},
        {"seed", [](RunConfig& c, auto k, auto v) { c.seed = parse_int<std::uint64_t>(k, v); }},
        {"max_words", [](RunConfig& c, auto k, auto v) { c.stem_constraints.max_words = parse_int<int>(k, v); }},
        {"domain", [](RunConfig& c, auto, auto v) { c.stem_constraints.domain_label = text::trim(v); }},
        {"allow_initial_key",
         [](RunConfig& c, auto k, auto v) { c.stem_constraints.forbid_initial_position = !parse_bool(k, v); }},
        {"pool_size", [](RunConfig& c, auto k, auto v) { c.pool_size = parse_int<int>(k, v); }},
        {"max_rounds", [](RunConfig& c, auto k, auto v) { c.max_rounds = parse_int<int>(k, v); }},
        {"stem_attempts", [](RunConfig& c, auto k, auto v) { c.stem_attempts = parse_int<int>(k, v); }},
        {"transport",
         [](RunConfig& c, auto k, auto v) {
             const auto s = text::to_lower(text::trim(v));
             if (s == "live")
                 c.transport = TransportKind::Live;
             else if (s == "replay")
                 c.transport = TransportKind::Replay;
             else
                 bad_value(k, v);
         }},
        {"output", [](RunConfig& c, auto, auto v) { c.output_path = text::trim(v); }},
        {"log", [](RunConfig& c, auto, auto v) { c.log_path = text::trim(v); }},
        {"parallelism", [](RunConfig& c, auto k, auto v) { c.parallelism = parse_int<int>(k, v); }},
        {"transcripts", [](RunConfig& c, auto, auto v) { c.transcripts_path = text::trim(v); }},
        {"record", [](RunConfig& c, auto, auto v) { c.record_path = text::trim(v); }},
        {"no_timestamps", [](RunConfig& c, auto k, auto v) { c.mask_timestamps = parse_bool(k, v); }},
        {"whole_sentence", [](RunConfig& c, auto k, auto v) { c.whole_sentence = parse_bool(k, v); }},
        {"llm_pos_check", [](RunConfig& c, auto k, auto v) { c.llm_pos_check = parse_bool(k, v); }},
        {"endpoint", [](RunConfig& c, auto, auto v) { c.endpoint_url = text::trim(v); }},
        {"model", [](RunConfig& c, auto, auto v) { c.model = text::trim(v); }},
        {"api_key_env", [](RunConfig& c, auto, auto v) { c.api_key_env = text::trim(v); }},
        {"timeout", [](RunConfig& c, auto k, auto v) { c.timeout_seconds = parse_double(k, v); }},
        {"temperature", [](RunConfig& c, auto k, auto v) { c.temperature = parse_double(k, v); }},
        {"max_tokens", [](RunConfig& c, auto k, auto v) { c.max_output_tokens = parse_int<int>(k, v); }},
        {"retries", [](RunConfig& c, auto k, auto v) { c.retry_attempts = parse_int<int>(k, v); }},
        {"backoff_ms", [](RunConfig& c, auto k, auto v) { c.backoff_ms = parse_int<int>(k, v); }},
    };
    return table;
}

}  // namespace

void RunConfig::validate(std::size_t group_count) const
{
    auto fail = [](const std::string& m) { throw Error(Errc::ConfigError, m); };
    stem_constraints.validate();
    if (item_threshold <= 0)
        fail("threshold must be positive");
    if (static_cast<std::size_t>(item_threshold) > group_count)
        fail("threshold " + std::to_string(item_threshold) + " exceeds the " + std::to_string(group_count) +
             " word groups available (one item per headword)");
    if (pool_size <= 0)
        fail("pool_size must be positive");
    if (max_rounds <= 0)
        fail("max_rounds must be positive");
    if (stem_attempts <= 0)
        fail("stem_attempts must be positive");
    if (parallelism <= 0)
        fail("parallelism must be positive");
    if (retry_attempts <= 0)
        fail("retries must be positive");
    if (backoff_ms < 0)
        fail("backoff_ms must not be negative");
    if (timeout_seconds <= 0)
        fail("timeout must be positive");
    if (temperature < 0 || temperature > 2)
        fail("temperature must lie in [0, 2]");
    if (max_output_tokens <= 0)
        fail("max_tokens must be positive");
    if (transport == TransportKind::Replay && transcripts_path.empty())
        fail("replay transport needs a transcripts file");
    if (output_path.empty() || log_path.empty())
        fail("output and log paths must be set");
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view value)
{
    std::string k = text::to_lower(text::trim(key));
    std::replace(k.begin(), k.end(), '-', '_');
    auto it = setters().find(k);
    if (it == setters().end())
        throw Error(Errc::ConfigError, "unknown setting '" + std::string(key) + "'");
    it->second(config, k, value);
}

void apply_config_text(RunConfig& config, std::string_view text_in)
{
    int line_no = 0;
    for (const auto& raw : text::split(text_in, '\n')) {
        ++line_no;
        const auto line = text::trim(raw);
        if (line.empty() || line.front() == '#')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(Errc::ConfigError, "config line " + std::to_string(line_no) + ": expected key=value");
        apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
    }
}

void apply_config_file(RunConfig& config, const std::string& path)
{
    apply_config_text(config, text::read_file(path));
}

int QuestionItem::shortfall() const
{
    return static_cast<int>(std::count(distractors.begin(), distractors.end(), std::nullopt));
}

nlohmann::ordered_json RunSummary::to_json() const
{
    nlohmann::ordered_json j;
    j["items_written"] = items_written;
    j["llm_calls"] = llm_calls;
    j["duration_ms"] = duration_ms;
    j["shortfalls"] = shortfalls;
    j["items_with_shortfall"] = items_with_shortfall;
    j["stem_retries"] = stem_retries;
    j["exhausted_headwords"] = exhausted_headwords;
    j["exit_code"] = exit_code;
    return j;
}

namespace {

struct TaskOutcome {
    std::optional<QuestionItem> item;
    int retries = 0;
    std::exception_ptr error;
    std::shared_ptr<llm::LogSink> log = std::make_shared<llm::LogSink>();
};

bool pos_check_passes(llm::Gateway& gateway, const stem::GeneratedSentence& sentence, PosTag tag)
{
    const auto answer = gateway.complete_json(gateway.request(stem::build_pos_check_prompt(sentence, tag), "pos_check"));
    auto it = answer.value.find("pos_ok");
    if (it == answer.value.end() || !it->is_boolean()) {
        spdlog::warn("POS check answer has no boolean pos_ok: {}", answer.value.dump());
        return false;
    }
    return it->get<bool>();
}

TaskOutcome run_headword(const RunConfig& config, const WordGroupSet& groups, std::size_t index,
                         llm::Gateway& gateway, const morph::Morphology& morphology)
{
    const WordGroup& group = groups.groups[index];
    Rng rng = Rng(config.seed).fork(index);
    TaskOutcome out;

    distractors::SelectionOptions sel;
    sel.pool_size = static_cast<std::size_t>(config.pool_size);
    sel.max_rounds = config.max_rounds;
    sel.whole_sentence = config.whole_sentence;
    sel.morphology = &morphology;

    for (int attempt = 1; attempt <= config.stem_attempts; ++attempt) {
        const TaggedKey key = stem::pick_key(group, rng);
        const auto response =
            gateway.complete(gateway.request(stem::build_stem_prompt(key, config.stem_constraints), "stem"));
        auto report = stem::check_response(response.raw_text, key, config.stem_constraints, &group);
        if (report.passed() && config.llm_pos_check) {
            const auto sentence = stem::parse_sentence(response.raw_text);
            if (!pos_check_passes(gateway, sentence, key.tag))
                report.violations.push_back({stem::Violation::PosMismatch, "model POS check disagreed"});
        }
        if (!report.passed()) {
            spdlog::info("{}: stem attempt {} rejected ({})", group.headword, attempt, report.summary());
            ++out.retries;
            continue;
        }

        const auto stem = stem::blank_out(stem::parse_sentence(response.raw_text), key);
        distractors::DistractorSet picked;
        try {
            picked = distractors::select_distractors(stem, key, groups, gateway, rng, sel);
        } catch (const Error& e) {
            if (is_transport_failure(e.code()))
                throw;
            spdlog::warn("{}: judgment unusable on attempt {} ({})", group.headword, attempt, e.what());
            ++out.retries;
            continue;
        }

        QuestionItem item;
        item.headword = group.headword;
        item.sublist_id = group.sublist_id;
        item.stem = stem;
        item.key = stem.key;
        item.attempts_used = attempt;
        item.rounds_used = picked.rounds_used;
        for (std::size_t i = 0; i < picked.distractors.size() && i < item.distractors.size(); ++i)
            item.distractors[i] = picked.distractors[i];
        if (picked.shortfall > 0)
            spdlog::info("{}: {} distractor slot(s) left N/A{}", group.headword, picked.shortfall,
                         picked.depleted ? " (pool depleted)" : "");
        out.item = std::move(item);
        return out;
    }
    // Every attempt failed; the retry counter holds all of them, the last
    // one is not a retry.
    --out.retries;
    return out;
}

}  // namespace

RunResult generate(const RunConfig& config, const WordGroupSet& groups, llm::Gateway& gateway,
                   const morph::Morphology& morphology)
{
    config.validate(groups.size());
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t calls_before = gateway.calls();

    RunResult result;
    std::size_t next = 0;
    std::exception_ptr failure;

    while (result.items.size() < static_cast<std::size_t>(config.item_threshold) && next < groups.size() &&
           !failure) {
        const std::size_t need = config.item_threshold - result.items.size();
        const std::size_t batch_end = std::min(groups.size(), next + need);
        std::vector<TaskOutcome> outcomes(batch_end - next);

        std::atomic<std::size_t> cursor{0};
        std::atomic<bool> stop{false};
        auto worker = [&] {
            for (std::size_t i = cursor++; i < outcomes.size(); i = cursor++) {
                if (stop)
                    return;
                auto& slot = outcomes[i];
                auto sink = slot.log;
                try {
                    auto local = gateway.with_log(sink);
                    slot = run_headword(config, groups, next + i, local, morphology);
                    slot.log = sink;
                } catch (...) {
                    slot.log = sink;
                    slot.error = std::current_exception();
                    stop = true;
                }
            }
        };

        const std::size_t threads = std::min<std::size_t>(config.parallelism, outcomes.size());
        if (threads <= 1) {
            worker();
        } else {
            std::vector<std::jthread> pool;
            for (std::size_t t = 0; t < threads; ++t)
                pool.emplace_back(worker);
        }

        // Merge per-headword logs in headword order so the log is
        // independent of scheduling.
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            auto& o = outcomes[i];
            for (auto& rec : o.log->snapshot())
                gateway.log().append(std::move(rec));
            if (o.error) {
                if (!failure)
                    failure = o.error;
                continue;
            }
            result.summary.stem_retries += o.retries;
            if (o.item)
                result.items.push_back(std::move(*o.item));
            else if (!stop)
                result.summary.exhausted_headwords.push_back(groups.groups[next + i].headword);
        }
        next = batch_end;
    }

    for (std::size_t i = 0; i < result.items.size(); ++i)
        result.items[i].item_id = static_cast<int>(i + 1);

    auto& s = result.summary;
    for (const auto& h : s.exhausted_headwords)
        spdlog::warn("{}: no valid stem after {} attempts, headword skipped", h, config.stem_attempts);
    s.items_written = static_cast<int>(result.items.size());
    s.llm_calls = gateway.calls() - calls_before;
    for (const auto& item : result.items) {
        s.shortfalls += item.shortfall();
        if (item.shortfall() > 0)
            ++s.items_with_shortfall;
    }
    s.duration_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    const bool partial = s.shortfalls > 0 || !s.exhausted_headwords.empty() || s.items_written < config.item_threshold;
    s.exit_code = partial ? 2 : 0;

    if (failure)
        std::rethrow_exception(failure);
    return result;
}

WordGroupSet load_groups(const std::string& path, const morph::Morphology& morphology)
{
    const std::string content = text::read_file(path);
    if (!wordlist::looks_like_headword_list(content))
        return wordlist::parse_word_groups(content, path);

    WordGroupSet set;
    set.source_label = path;
    for (const auto& entry : wordlist::parse_headword_list(content))
        set.groups.push_back(morphology.build_word_group(entry));
    return set;
}

std::unique_ptr<llm::Transport> make_transport(const RunConfig& config)
{
    if (config.transport == TransportKind::Replay) {
        if (config.transcripts_path.empty())
            throw Error(Errc::ConfigError, "replay transport needs a transcripts file");
        return llm::replay_transport(llm::TranscriptStore::load(config.transcripts_path));
    }
    llm::LiveConfig live;
    live.endpoint_url = config.endpoint_url;
    live.model = config.model;
    live.timeout_seconds = config.timeout_seconds;
    if (const char* key = std::getenv(config.api_key_env.c_str()))
        live.api_key = key;
    else
        spdlog::warn("{} is not set; sending requests without credentials", config.api_key_env);
    return std::make_unique<llm::HttpTransport>(std::move(live));
}

RunSummary run_pipeline(const RunConfig& config)
{
    morph::Morphology morphology;
    const WordGroupSet groups = load_groups(config.wordlist_path, morphology);
    config.validate(groups.size());

    std::unique_ptr<llm::Transport> transport = make_transport(config);
    std::shared_ptr<llm::RecordingTransport> recorder;
    std::shared_ptr<llm::Transport> active;
    if (!config.record_path.empty()) {
        recorder = std::make_shared<llm::RecordingTransport>(std::move(transport));
        active = recorder;
    } else {
        active = std::move(transport);
    }

    llm::GatewayOptions options;
    options.retry.max_attempts = config.retry_attempts;
    options.retry.backoff_base = std::chrono::milliseconds(config.backoff_ms);
    options.max_in_flight = config.parallelism;
    options.temperature = config.temperature;
    options.max_output_tokens = config.max_output_tokens;
    llm::Gateway gateway(active, options);

    auto flush_side_files = [&] {
        write_log_csv(gateway.log().snapshot(), config.log_path, config.mask_timestamps);
        if (recorder)
            recorder->transcript().save(config.record_path);
    };

    RunResult result;
    try {
        result = generate(config, groups, gateway, morphology);
    } catch (...) {
        flush_side_files();
        throw;
    }
    write_output_csv(result.items, config.output_path);
    flush_side_files();
    return result.summary;
}

std::string format_output_csv(const std::vector<QuestionItem>& items)
{
    std::string out(kOutputHeader);
    out += '\n';
    for (const auto& item : items) {
        csv::Row row{std::to_string(item.item_id), item.headword, std::to_string(item.sublist_id),
                     item.key.surface, std::string(to_string(item.key.tag)), item.stem.text_with_blank};
        for (const auto& d : item.distractors)
            row.push_back(d ? d->surface : std::string(kNotAvailable));
        out += csv::format_row(row);
    }
    return out;
}

void write_output_csv(const std::vector<QuestionItem>& items, const std::string& path)
{
    text::write_file(path, format_output_csv(items));
}

void write_log_csv(const std::vector<llm::LogRecord>& records, const std::string& path, bool mask_timestamps)
{
    text::write_file(path, llm::format_log_csv(records, mask_timestamps));
}

std::vector<OutputRow> parse_output_csv(std::string_view text_in)
{
    std::vector<csv::Row> rows;
    try {
        rows = csv::parse(text_in);
    } catch (const Error& e) {
        throw Error(Errc::MalformedOutputFile, e.what());
    }
    if (rows.empty() || text::join(rows.front(), ",") != kOutputHeader)
        throw Error(Errc::MalformedOutputFile, "expected header " + std::string(kOutputHeader));

    auto number = [](const std::string& s, std::size_t line) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw Error(Errc::MalformedOutputFile, "line " + std::to_string(line) + ": '" + s + "' is not a number");
        return v;
    };

    std::vector<OutputRow> out;
    std::set<int> ids;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::size_t line = r + 1;
        if (row.size() == 1 && row[0].empty())
            continue;
        if (row.size() != 9)
            throw Error(Errc::MalformedOutputFile, "line " + std::to_string(line) + ": expected 9 fields");
        OutputRow o;
        o.item_id = number(row[0], line);
        o.headword = row[1];
        o.sublist_id = number(row[2], line);
        o.key = row[3];
        o.key_pos = row[4];
        o.stem = row[5];
        o.distractors = {row[6], row[7], row[8]};
        if (!ids.insert(o.item_id).second)
            throw Error(Errc::MalformedOutputFile, "duplicate item_id " + row[0]);
        const auto first = o.stem.find(stem::kBlank);
        if (first == std::string::npos || o.stem.find(stem::kBlank, first + 1) != std::string::npos)
            throw Error(Errc::MalformedOutputFile, "item " + row[0] + ": stem must contain exactly one blank");
        if (o.key.empty())
            throw Error(Errc::MalformedOutputFile, "item " + row[0] + ": empty key");
        out.push_back(std::move(o));
    }
    return out;
}

std::vector<OutputRow> read_output_csv(const std::string& path)
{
    return parse_output_csv(text::read_file(path));
}

}  // namespace cloze::pipeline
