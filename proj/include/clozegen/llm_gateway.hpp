#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace cloze::llm {

struct CompletionRequest {
    std::string prompt_text;
    double temperature = 0.0;
    int max_output_tokens = 512;
    std::string request_tag;  // "stem" | "judgment" | ...

    void validate() const;
};

struct CompletionResponse {
    std::string raw_text;  // verbatim
    std::int64_t latency_ms = 0;
    std::string transport_label;  // "live" | "replay" | ...
};

/// Something that turns a request into a response. Implementations throw
/// Error(TransportError | Timeout | ReplayMiss).
class Transport {
public:
    virtual ~Transport() = default;
    virtual CompletionResponse send(const CompletionRequest& request) = 0;
    virtual std::string label() const = 0;
    virtual std::string model() const = 0;
};

/// Trailing whitespace trimmed per line, CRLF collapsed to LF.
std::string normalize_prompt(std::string_view prompt);

struct TranscriptEntry {
    std::string request_tag;
    std::string prompt;
    std::string response;
};

/// Ordered (tag, prompt) -> response pairs. Lookup is an exact match on the
/// normalized prompt; adding an existing key replaces its response in place
/// (last write wins, first position kept).
class TranscriptStore {
public:
    void add(TranscriptEntry entry);
    std::optional<std::string> find(std::string_view request_tag, std::string_view prompt) const;

    const std::vector<TranscriptEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    /// JSON Lines: one {"request_tag", "prompt", "response"} object per line.
    static TranscriptStore parse_jsonl(std::string_view text);
    static TranscriptStore load(const std::string& path);
    std::string to_jsonl() const;
    void save(const std::string& path) const;

private:
    std::vector<TranscriptEntry> entries_;
    std::map<std::pair<std::string, std::string>, std::size_t> index_;
};

TranscriptStore record_transcript(const std::vector<std::pair<CompletionRequest, CompletionResponse>>& pairs);

/// Read-only replay of a transcript store; safe for concurrent use.
class ReplayTransport final : public Transport {
public:
    explicit ReplayTransport(std::shared_ptr<const TranscriptStore> store, std::string model = "replay");

    CompletionResponse send(const CompletionRequest& request) override;
    std::string label() const override { return "replay"; }
    std::string model() const override { return model_; }

private:
    std::shared_ptr<const TranscriptStore> store_;
    std::string model_;
};

std::unique_ptr<Transport> replay_transport(const TranscriptStore& store);

/// Wraps another transport and keeps every successful exchange.
class RecordingTransport final : public Transport {
public:
    explicit RecordingTransport(std::unique_ptr<Transport> inner);

    CompletionResponse send(const CompletionRequest& request) override;
    std::string label() const override { return inner_->label(); }
    std::string model() const override { return inner_->model(); }

    TranscriptStore transcript() const;

private:
    std::unique_ptr<Transport> inner_;
    mutable std::mutex mutex_;
    TranscriptStore store_;
};

struct LiveConfig {
    std::string endpoint_url;  // full URL of an OpenAI-compatible chat-completions endpoint
    std::string model;
    std::string api_key;  // read from the environment by the caller
    double timeout_seconds = 60.0;
};

/// HTTP(S) chat-completion client. Nothing provider-specific beyond the
/// common {"model", "messages"} request shape.
class HttpTransport final : public Transport {
public:
    explicit HttpTransport(LiveConfig config);

    CompletionResponse send(const CompletionRequest& request) override;
    std::string label() const override { return "live"; }
    std::string model() const override { return config_.model; }

private:
    LiveConfig config_;
    std::string base_;
    std::string path_;
};

struct LogRecord {
    std::string timestamp;  // ISO-8601 UTC
    std::string request_tag;
    std::string model;
    std::string prompt;
    std::string raw_response;
    std::string status;  // "ok" or the error code name
    std::int64_t latency_ms = 0;
};

/// Serializes appends from concurrent callers.
class LogSink {
public:
    void append(LogRecord record);
    std::vector<LogRecord> snapshot() const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::vector<LogRecord> records_;
};

inline constexpr std::string_view kLogHeader = "timestamp,request_tag,model,prompt,raw_response,status,latency_ms";

/// Log CSV; with mask_timestamps the timestamp column is left empty.
std::string format_log_csv(const std::vector<LogRecord>& records, bool mask_timestamps);

struct JsonExtract {
    nlohmann::json value;
    std::size_t begin = 0;  // span of raw_text consumed
    std::size_t end = 0;
};

/// First well-formed JSON object in `raw_text`, tolerating prose and code
/// fences around it. Throws NoJsonFound / MalformedJson.
JsonExtract extract_json(std::string_view raw_text);

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds backoff_base{250};  // doubled after each failure
};

struct GatewayOptions {
    RetryPolicy retry;
    int max_in_flight = 1;
    double temperature = 0.0;
    int max_output_tokens = 512;
};

struct JsonCompletion {
    nlohmann::json value;
    CompletionResponse response;
    int asks = 1;  // 2 when the re-ask was needed
};

inline constexpr std::string_view kJsonOnlyInstruction =
    "\n\nRespond with only the JSON object, without any other text.";

/// Logs every complete() call, successful or not, before returning.
class Gateway {
public:
    Gateway(std::shared_ptr<Transport> transport, GatewayOptions options,
            std::shared_ptr<LogSink> log = std::make_shared<LogSink>());

    /// Same transport, options and in-flight limit, logging into `log`.
    Gateway with_log(std::shared_ptr<LogSink> log) const;

    CompletionResponse complete(const CompletionRequest& request);

    /// complete() + extract_json(); on a malformed or missing JSON body the
    /// same prompt is sent once more with kJsonOnlyInstruction appended.
    JsonCompletion complete_json(const CompletionRequest& request);

    /// Request with the gateway's default sampling settings.
    CompletionRequest request(std::string prompt, std::string tag) const;

    LogSink& log() { return *log_; }
    std::shared_ptr<LogSink> log_ptr() const { return log_; }
    std::size_t calls() const { return log_->size(); }
    Transport& transport() { return *transport_; }

    /// Injected clock for log timestamps (tests).
    void set_clock(std::function<std::string()> clock) { clock_ = std::move(clock); }
    void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) { sleep_ = std::move(sleeper); }

    const GatewayOptions& options() const { return options_; }

private:
    using Semaphore = std::counting_semaphore<1024>;

    std::shared_ptr<Transport> transport_;
    GatewayOptions options_;
    std::shared_ptr<LogSink> log_;
    std::shared_ptr<Semaphore> in_flight_;
    std::function<std::string()> clock_;
    std::function<void(std::chrono::milliseconds)> sleep_;
};

std::string utc_timestamp();

}  // namespace cloze::llm
