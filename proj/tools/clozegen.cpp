// clozegen: command-line front end.
//
//   clozegen preprocess --wordlist awl.csv --output groups.csv
//   clozegen generate --wordlist groups.csv --transport replay --transcripts t.jsonl --seed 7
//   clozegen review serve --items output.csv --ratings ratings.jsonl
//   clozegen eval --ratings ratings.csv [--labels labels.csv]
//   clozegen record --log log.csv --output transcripts.jsonl
//   clozegen replay --transcripts t.jsonl --tag stem --prompt-file p.txt

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "clozegen/csv.hpp"
#include "clozegen/error.hpp"
#include "clozegen/evalkit.hpp"
#include "clozegen/llm_gateway.hpp"
#include "clozegen/morphology.hpp"
#include "clozegen/pipeline.hpp"
#include "clozegen/prompts.hpp"
#include "clozegen/review_service.hpp"
#include "clozegen/text.hpp"
#include "clozegen/wordlist.hpp"

using namespace cloze;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitTransport = 3;

struct Setting {
    const char* flag;
    const char* key;
    const char* help;
    bool is_flag = false;
};

// Flags that map one-to-one onto RunConfig keys.
const std::vector<Setting> kRunSettings = {
    {"--wordlist", "wordlist", "word-group CSV (or a raw headword,sublist list)"},
    {"--threshold", "threshold", "number of items to produce (default 60)"},
    {"--seed", "seed", "64-bit seed for key, pool and distractor sampling"},
    {"--max-words", "max_words", "maximum words per stem (default 20)"},
    {"--domain", "domain", "text domain named in the stem prompt"},
    {"--allow-initial-key", "allow_initial_key", "do not reject keys in sentence-initial position", true},
    {"--pool-size", "pool_size", "candidates per judgment round (default 10)"},
    {"--max-rounds", "max_rounds", "judgment rounds per item (default 6)"},
    {"--stem-attempts", "stem_attempts", "stem generations per headword before skipping it (default 3)"},
    {"--transport", "transport", "live or replay"},
    {"--output", "output", "output CSV path"},
    {"--log", "log", "log CSV path"},
    {"--parallelism", "parallelism", "headwords processed concurrently (default 1)"},
    {"--transcripts", "transcripts", "transcript JSONL for the replay transport"},
    {"--record", "record", "save every exchange of this run as transcript JSONL"},
    {"--no-timestamps", "no_timestamps", "leave the log timestamp column empty", true},
    {"--whole-sentence", "whole_sentence", "judge candidates inside complete sentences", true},
    {"--llm-pos-check", "llm_pos_check", "ask the model to confirm the key's POS in each stem", true},
    {"--endpoint", "endpoint", "chat-completions URL for the live transport"},
    {"--model", "model", "model name sent to the live endpoint"},
    {"--api-key-env", "api_key_env", "environment variable holding the API key"},
    {"--timeout", "timeout", "per-request timeout in seconds"},
    {"--temperature", "temperature", "sampling temperature (default 0)"},
    {"--max-tokens", "max_tokens", "max output tokens per request"},
    {"--retries", "retries", "attempts per request on transport errors"},
    {"--backoff-ms", "backoff_ms", "initial retry backoff in milliseconds"},
};

struct SettingBinding {
    const Setting* setting;
    CLI::Option* option;
    std::string value;
    bool flag_value = false;
};

void bind_run_settings(CLI::App& app, std::vector<SettingBinding>& bindings)
{
    bindings.reserve(kRunSettings.size());
    for (const auto& s : kRunSettings) {
        bindings.push_back({&s, nullptr, {}, false});
        auto& b = bindings.back();
        b.option = s.is_flag ? app.add_flag(s.flag, b.flag_value, s.help) : app.add_option(s.flag, b.value, s.help);
    }
}

void apply_bindings(pipeline::RunConfig& config, const std::vector<SettingBinding>& bindings)
{
    for (const auto& b : bindings)
        if (b.option->count() > 0)
            pipeline::apply_setting(config, b.setting->key, b.setting->is_flag ? (b.flag_value ? "true" : "false")
                                                                              : b.value);
}

int report_error(const Error& e)
{
    spdlog::error("{}", e.what());
    return is_transport_failure(e.code()) ? kExitTransport : kExitConfig;
}

llm::Gateway make_gateway(const pipeline::RunConfig& config)
{
    llm::GatewayOptions options;
    options.retry.max_attempts = config.retry_attempts;
    options.retry.backoff_base = std::chrono::milliseconds(config.backoff_ms);
    options.max_in_flight = config.parallelism;
    options.temperature = config.temperature;
    options.max_output_tokens = config.max_output_tokens;
    return llm::Gateway(pipeline::make_transport(config), options);
}

PosTagSet parse_tag_answer(const nlohmann::json& value)
{
    PosTagSet tags;
    auto it = value.find("tags");
    if (it == value.end() || !it->is_array())
        throw Error(Errc::MalformedJson, "expected {\"tags\": [...]}");
    for (const auto& t : *it) {
        if (!t.is_string())
            throw Error(Errc::MalformedJson, "tag list holds a non-string");
        if (auto tag = parse_pos_tag(t.get<std::string>()))
            tags.insert(*tag);
    }
    return tags;
}

// ------------------------------------------------------------ subcommands

struct PreprocessArgs {
    std::string wordlist;
    std::string output;
    std::string lexicon;
    std::string secondary_tags;
    bool llm_tags = false;
    std::string log;
    std::vector<SettingBinding> bindings;
};

int run_preprocess(PreprocessArgs& a, const std::string& config_file)
{
    auto morphology = a.lexicon.empty() ? morph::Morphology() : morph::Morphology(morph::Lexicon::load(a.lexicon));
    const auto entries = wordlist::read_headword_list(a.wordlist);

    morph::SecondaryTagger secondary;
    std::unique_ptr<llm::Gateway> gateway;
    if (!a.secondary_tags.empty()) {
        secondary = morph::FixtureTagger::load(a.secondary_tags);
    } else if (a.llm_tags) {
        pipeline::RunConfig config;
        if (!config_file.empty())
            pipeline::apply_config_file(config, config_file);
        apply_bindings(config, a.bindings);
        gateway = std::make_unique<llm::Gateway>(make_gateway(config));
        secondary = [&](std::string_view headword) {
            const auto prompt = text::substitute(prompts::pos_tags_template(), {{"word", std::string(headword)}});
            return parse_tag_answer(gateway->complete_json(gateway->request(prompt, "pos_tags")).value);
        };
    }

    WordGroupSet set;
    set.source_label = a.wordlist;
    int low_confidence = 0;
    for (const auto& e : entries) {
        if (morphology.tag_pos(e.headword).low_confidence)
            ++low_confidence;
        set.groups.push_back(secondary ? morphology.build_word_group(e, secondary) : morphology.build_word_group(e));
    }
    if (gateway && !a.log.empty())
        pipeline::write_log_csv(gateway->log().snapshot(), a.log, false);
    wordlist::write_word_groups(set, a.output);
    spdlog::info("wrote {} word groups to {} ({} tagged by suffix rules only)", set.size(), a.output, low_confidence);
    return kExitOk;
}

struct GenerateArgs {
    bool json = false;
    std::vector<SettingBinding> bindings;
};

int run_generate(GenerateArgs& a, const std::string& config_file)
{
    pipeline::RunConfig config;
    if (!config_file.empty())
        pipeline::apply_config_file(config, config_file);
    apply_bindings(config, a.bindings);
    if (config.wordlist_path.empty())
        throw Error(Errc::ConfigError, "--wordlist is required");

    const auto summary = pipeline::run_pipeline(config);
    spdlog::info("{} items, {} LLM calls, {} missing distractor slots, {} stem retries, {} ms", summary.items_written,
                 summary.llm_calls, summary.shortfalls, summary.stem_retries, summary.duration_ms);
    if (!summary.exhausted_headwords.empty())
        spdlog::warn("skipped headwords: {}", text::join(summary.exhausted_headwords, ", "));
    if (a.json)
        std::cout << summary.to_json().dump(2) << "\n";
    return summary.exit_code;
}

struct ServeArgs {
    review::ServiceConfig config;
};

review::ReviewService* g_service = nullptr;

extern "C" void on_signal(int)
{
    if (g_service)
        g_service->stop();
}

int run_serve(ServeArgs& a)
{
    review::ReviewService service(a.config);
    const int port = service.start();
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    spdlog::info("serving {} items ({} targets) on http://{}:{}", service.items().size(), service.target_count(),
                 a.config.bind_host, port);
    service.wait();
    g_service = nullptr;
    spdlog::info("ratings flushed to {}", a.config.ratings_path);
    return kExitOk;
}

struct EvalArgs {
    std::string ratings;
    std::string labels;
    std::string vocabulary;
    std::string format = "text";
};

int run_eval(const EvalArgs& a)
{
    if (a.ratings.empty() && a.labels.empty())
        throw Error(Errc::ConfigError, "give --ratings, --labels, or both");
    const bool json = a.format == "json";

    std::optional<eval::AgreementReport> report;
    std::vector<eval::ReviewRecord> records;
    if (!a.ratings.empty()) {
        records = eval::parse_ratings_csv(text::read_file(a.ratings));
        report = eval::agreement_report(records);
    }
    std::optional<eval::Tally> table;
    if (!a.labels.empty()) {
        auto vocabulary = eval::Vocabulary::builtin();
        if (!a.vocabulary.empty())
            vocabulary.extend_csv(text::read_file(a.vocabulary));
        table = eval::tally(eval::parse_labels_csv(text::read_file(a.labels)), vocabulary);
    }

    if (json) {
        if (report && !table) {
            // Same bytes as the review service's /stats.
            std::cout << eval::report_json(records);
        } else {
            nlohmann::ordered_json j;
            if (report)
                j["agreement"] = report->to_json();
            if (table)
                j["tally"] = table->to_json();
            std::cout << j.dump(2) << "\n";
        }
    } else {
        if (report)
            std::cout << report->to_text();
        if (report && table)
            std::cout << "\n";
        if (table)
            std::cout << table->to_text();
    }
    return kExitOk;
}

int run_record(const std::string& log_path, const std::string& output)
{
    const auto rows = csv::parse(text::read_file(log_path));
    if (rows.empty() || text::join(rows.front(), ",") != llm::kLogHeader)
        throw Error(Errc::MalformedCsv, "expected log header " + std::string(llm::kLogHeader));
    llm::TranscriptStore store;
    std::size_t skipped = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() == 1 && row[0].empty())
            continue;
        if (row.size() != 7)
            throw Error(Errc::MalformedCsv, "log line " + std::to_string(r + 1) + ": expected 7 fields");
        if (row[5] != "ok") {
            ++skipped;
            continue;
        }
        store.add({row[1], row[3], row[4]});
    }
    store.save(output);
    spdlog::info("wrote {} transcript entries to {} ({} failed calls skipped)", store.size(), output, skipped);
    return kExitOk;
}

int run_replay(const std::string& transcripts, const std::string& tag, const std::string& prompt_file)
{
    const auto store = llm::TranscriptStore::load(transcripts);
    std::string prompt = text::read_file(prompt_file);
    if (!prompt.empty() && prompt.back() == '\n')
        prompt.pop_back();
    if (auto hit = store.find(tag, prompt)) {
        std::cout << *hit << "\n";
        return kExitOk;
    }
    spdlog::error("no {} response recorded for that prompt", tag);
    return kExitConfig;
}

}  // namespace

int main(int argc, char** argv)
{
    auto logger = spdlog::stderr_color_mt("clozegen");
    logger->set_pattern("%^%l%$: %v");
    spdlog::set_default_logger(logger);

    CLI::App app{"Cloze item generation, review and evaluation"};
    app.require_subcommand(1);
    bool verbose = false;
    bool quiet = false;
    std::string config_file;
    app.add_flag("-v,--verbose", verbose, "debug output on standard error");
    app.add_flag("-q,--quiet", quiet, "warnings and errors only");
    app.fallthrough();

    auto* pre = app.add_subcommand("preprocess", "headword list -> word-group CSV");
    PreprocessArgs pre_args;
    pre->add_option("--wordlist", pre_args.wordlist, "headword,sublist CSV")->required();
    pre->add_option("--output", pre_args.output, "word-group CSV to write")->required();
    pre->add_option("--lexicon", pre_args.lexicon, "lexicon file replacing the bundled one");
    pre->add_option("--secondary-tags", pre_args.secondary_tags, "'headword TAG TAG' file for tag cross-validation");
    pre->add_flag("--llm-tags", pre_args.llm_tags, "cross-validate tags with the model (uses the transport flags)");
    pre->add_option("--config", config_file, "key=value config file for the transport settings");
    auto* pre_transport = pre->add_option_group("transport");
    for (const auto& s : kRunSettings) {
        const std::string f = s.flag;
        if (f == "--transport" || f == "--transcripts" || f == "--endpoint" || f == "--model" ||
            f == "--api-key-env" || f == "--timeout" || f == "--retries" || f == "--backoff-ms") {
            pre_args.bindings.push_back({&s, nullptr, {}, false});
        }
    }
    for (auto& b : pre_args.bindings)
        b.option = pre_transport->add_option(b.setting->flag, b.value, b.setting->help);
    pre->add_option("--log", pre_args.log, "log CSV for the tagging calls");

    auto* gen = app.add_subcommand("generate", "word groups -> question items");
    GenerateArgs gen_args;
    gen->add_option("--config", config_file, "key=value config file; flags take precedence");
    gen->add_flag("--json", gen_args.json, "print the run summary as JSON on standard output");
    bind_run_settings(*gen, gen_args.bindings);

    auto* review = app.add_subcommand("review", "human review of generated items");
    review->require_subcommand(1);
    auto* serve = review->add_subcommand("serve", "serve items and collect verdicts over HTTP");
    ServeArgs serve_args;
    serve->add_option("--items", serve_args.config.output_csv_path, "output CSV from generate")->required();
    serve->add_option("--ratings", serve_args.config.ratings_path, "ratings store (JSON Lines, appended)")->required();
    serve->add_option("--host", serve_args.config.bind_host, "bind address (default 127.0.0.1)");
    serve->add_option("--port", serve_args.config.port, "port (default 8080, 0 = any free port)");
    serve->add_option("--seed", serve_args.config.run_seed, "run seed; fixes the option order shown to reviewers");
    serve->add_option("--ui-dir", serve_args.config.ui_dir, "static review UI served at /");

    auto* ev = app.add_subcommand("eval", "agreement statistics and error tallies");
    EvalArgs eval_args;
    ev->add_option("--ratings", eval_args.ratings, "ratings CSV (target_id,target_kind,reviewer_id,verdict,comment)");
    ev->add_option("--labels", eval_args.labels, "annotation CSV (target_id,category,subcategory)");
    ev->add_option("--vocabulary", eval_args.vocabulary, "extra category,subcategory rows");
    ev->add_option("--format", eval_args.format, "text or json")->check(CLI::IsMember({"text", "json"}));

    auto* rec = app.add_subcommand("record", "log CSV -> transcript JSONL for replay");
    std::string rec_log, rec_out;
    rec->add_option("--log", rec_log, "log CSV from a previous run")->required();
    rec->add_option("--output", rec_out, "transcript JSONL to write")->required();

    auto* rep = app.add_subcommand("replay", "look up a recorded response");
    std::string rep_transcripts, rep_tag = "stem", rep_prompt;
    rep->add_option("--transcripts", rep_transcripts, "transcript JSONL")->required();
    rep->add_option("--tag", rep_tag, "request tag (stem, judgment, ...)");
    rep->add_option("--prompt-file", rep_prompt, "file holding the exact prompt")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        if (*pre)
            return run_preprocess(pre_args, config_file);
        if (*gen)
            return run_generate(gen_args, config_file);
        if (*serve)
            return run_serve(serve_args);
        if (*ev)
            return run_eval(eval_args);
        if (*rec)
            return run_record(rec_log, rec_out);
        if (*rep)
            return run_replay(rep_transcripts, rep_tag, rep_prompt);
    } catch (const Error& e) {
        return report_error(e);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitConfig;
    }
    return kExitConfig;
}
