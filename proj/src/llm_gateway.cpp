#include "clozegen/llm_gateway.hpp"

#include <algorithm>
#include <ctime>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "clozegen/csv.hpp"
#include "clozegen/error.hpp"
#include "clozegen/text.hpp"

namespace cloze::llm {

using Clock = std::chrono::steady_clock;

void CompletionRequest::validate() const
{
    if (prompt_text.empty())
        throw Error(Errc::InvalidArgument, "completion request has an empty prompt");
    if (temperature < 0.0 || temperature > 2.0)
        throw Error(Errc::InvalidArgument, "temperature must lie in [0, 2]");
    if (max_output_tokens <= 0)
        throw Error(Errc::InvalidArgument, "max_output_tokens must be positive");
}

std::string normalize_prompt(std::string_view prompt)
{
    std::string out;
    out.reserve(prompt.size());
    std::size_t start = 0;
    while (start <= prompt.size()) {
        std::size_t nl = prompt.find('\n', start);
        const bool last = nl == std::string_view::npos;
        std::string_view line = prompt.substr(start, last ? std::string_view::npos : nl - start);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
            line.remove_suffix(1);
        out += line;
        if (last)
            break;
        out += '\n';
        start = nl + 1;
    }
    return out;
}

// ---------------------------------------------------------------- transcripts

void TranscriptStore::add(TranscriptEntry entry)
{
    auto key = std::make_pair(entry.request_tag, normalize_prompt(entry.prompt));
    if (auto it = index_.find(key); it != index_.end()) {
        entries_[it->second] = std::move(entry);
        return;
    }
    index_.emplace(std::move(key), entries_.size());
    entries_.push_back(std::move(entry));
}

std::optional<std::string> TranscriptStore::find(std::string_view request_tag, std::string_view prompt) const
{
    auto it = index_.find({std::string(request_tag), normalize_prompt(prompt)});
    if (it == index_.end())
        return std::nullopt;
    return entries_[it->second].response;
}

TranscriptStore TranscriptStore::parse_jsonl(std::string_view text_in)
{
    TranscriptStore store;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text_in.size()) {
        std::size_t nl = text_in.find('\n', start);
        if (nl == std::string_view::npos)
            nl = text_in.size();
        const std::string line = text::trim(text_in.substr(start, nl - start));
        start = nl + 1;
        ++line_no;
        if (line.empty())
            continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::MalformedJson, "transcript line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("request_tag") || !j.contains("prompt") || !j.contains("response") ||
            !j["request_tag"].is_string() || !j["prompt"].is_string() || !j["response"].is_string())
            throw Error(Errc::MalformedJson, "transcript line " + std::to_string(line_no) +
                                                 ": expected string fields request_tag, prompt, response");
        store.add({j["request_tag"].get<std::string>(), j["prompt"].get<std::string>(),
                   j["response"].get<std::string>()});
    }
    return store;
}

TranscriptStore TranscriptStore::load(const std::string& path)
{
    return parse_jsonl(text::read_file(path));
}

std::string TranscriptStore::to_jsonl() const
{
    std::string out;
    for (const auto& e : entries_) {
        nlohmann::ordered_json j;
        j["request_tag"] = e.request_tag;
        j["prompt"] = e.prompt;
        j["response"] = e.response;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void TranscriptStore::save(const std::string& path) const
{
    text::write_file(path, to_jsonl());
}

TranscriptStore record_transcript(const std::vector<std::pair<CompletionRequest, CompletionResponse>>& pairs)
{
    TranscriptStore store;
    for (const auto& [req, resp] : pairs)
        store.add({req.request_tag, req.prompt_text, resp.raw_text});
    return store;
}

ReplayTransport::ReplayTransport(std::shared_ptr<const TranscriptStore> store, std::string model)
    : store_(std::move(store)), model_(std::move(model))
{
}

CompletionResponse ReplayTransport::send(const CompletionRequest& request)
{
    auto hit = store_->find(request.request_tag, request.prompt_text);
    if (!hit)
        throw Error(Errc::ReplayMiss, "no recorded response for " + request.request_tag + " prompt: " +
                                          request.prompt_text.substr(0, 80));
    return {*hit, 0, "replay"};
}

std::unique_ptr<Transport> replay_transport(const TranscriptStore& store)
{
    return std::make_unique<ReplayTransport>(std::make_shared<const TranscriptStore>(store));
}

RecordingTransport::RecordingTransport(std::unique_ptr<Transport> inner) : inner_(std::move(inner)) {}

CompletionResponse RecordingTransport::send(const CompletionRequest& request)
{
    auto resp = inner_->send(request);
    std::lock_guard lock(mutex_);
    store_.add({request.request_tag, request.prompt_text, resp.raw_text});
    return resp;
}

TranscriptStore RecordingTransport::transcript() const
{
    std::lock_guard lock(mutex_);
    return store_;
}

// ---------------------------------------------------------------- live HTTP

HttpTransport::HttpTransport(LiveConfig config) : config_(std::move(config))
{
    const auto scheme_end = config_.endpoint_url.find("://");
    if (scheme_end == std::string::npos)
        throw Error(Errc::ConfigError, "endpoint_url must start with http:// or https://");
    const auto path_start = config_.endpoint_url.find('/', scheme_end + 3);
    base_ = config_.endpoint_url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : config_.endpoint_url.substr(path_start);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (text::starts_with(config_.endpoint_url, "https://"))
        throw Error(Errc::ConfigError, "this build has no TLS support; use an http:// endpoint");
#endif
}

CompletionResponse HttpTransport::send(const CompletionRequest& request)
{
    httplib::Client client(base_);
    const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
    const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(usec).count(),
                                  static_cast<time_t>(usec.count() % 1000000));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(usec).count(),
                            static_cast<time_t>(usec.count() % 1000000));

    httplib::Headers headers;
    if (!config_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + config_.api_key);

    nlohmann::json body = {
        {"model", config_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt_text}}})},
        {"temperature", request.temperature},
        {"max_tokens", request.max_output_tokens},
    };

    const auto t0 = Clock::now();
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    const auto elapsed = Clock::now() - t0;
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();

    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout ||
            (err == httplib::Error::Read && elapsed >= timeout * 0.9))
            throw Error(Errc::Timeout, "no response from " + base_ + " within " +
                                           std::to_string(config_.timeout_seconds) + " s");
        throw Error(Errc::TransportError, "request to " + base_ + " failed: " + httplib::to_string(err));
    }
    if (res->status < 200 || res->status >= 300)
        throw Error(Errc::TransportError, "HTTP " + std::to_string(res->status) + " from " + base_ + path_);

    try {
        const auto j = nlohmann::json::parse(res->body);
        return {j.at("choices").at(0).at("message").at("content").get<std::string>(), ms, "live"};
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::TransportError, std::string("unexpected completion payload: ") + e.what());
    }
}

// ---------------------------------------------------------------- log

void LogSink::append(LogRecord record)
{
    std::lock_guard lock(mutex_);
    records_.push_back(std::move(record));
}

std::vector<LogRecord> LogSink::snapshot() const
{
    std::lock_guard lock(mutex_);
    return records_;
}

std::size_t LogSink::size() const
{
    std::lock_guard lock(mutex_);
    return records_.size();
}

std::string format_log_csv(const std::vector<LogRecord>& records, bool mask_timestamps)
{
    std::string out(kLogHeader);
    out += '\n';
    for (const auto& r : records)
        out += csv::format_row({mask_timestamps ? std::string() : r.timestamp, r.request_tag, r.model, r.prompt,
                                r.raw_response, r.status, std::to_string(r.latency_ms)});
    return out;
}

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[40];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

// ---------------------------------------------------------------- JSON

namespace {

// Index one past the brace that closes the object opened at `open`, or npos.
std::size_t matching_brace(std::string_view s, std::size_t open)
{
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\')
                ++i;
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"')
            in_string = true;
        else if (c == '{')
            ++depth;
        else if (c == '}' && --depth == 0)
            return i + 1;
    }
    return std::string_view::npos;
}

}  // namespace

JsonExtract extract_json(std::string_view raw_text)
{
    std::string last_error;
    bool saw_brace = false;
    for (std::size_t open = raw_text.find('{'); open != std::string_view::npos;
         open = raw_text.find('{', open + 1)) {
        saw_brace = true;
        const std::size_t close = matching_brace(raw_text, open);
        if (close == std::string_view::npos) {
            last_error = "unbalanced braces";
            continue;
        }
        try {
            auto value = nlohmann::json::parse(raw_text.substr(open, close - open));
            return {std::move(value), open, close};
        } catch (const nlohmann::json::exception& e) {
            last_error = e.what();
        }
    }
    if (!saw_brace)
        throw Error(Errc::NoJsonFound, "response contains no JSON object");
    throw Error(Errc::MalformedJson, "no well-formed JSON object in response (" + last_error + ")");
}

// ---------------------------------------------------------------- gateway

Gateway::Gateway(std::shared_ptr<Transport> transport, GatewayOptions options, std::shared_ptr<LogSink> log)
    : transport_(std::move(transport)),
      options_(options),
      log_(std::move(log)),
      in_flight_(std::make_shared<Semaphore>(std::clamp(options.max_in_flight, 1, 1024))),
      clock_(utc_timestamp),
      sleep_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })
{
    if (!transport_)
        throw Error(Errc::ConfigError, "gateway needs a transport");
    if (options_.retry.max_attempts < 1)
        throw Error(Errc::ConfigError, "retry policy needs at least one attempt");
}

Gateway Gateway::with_log(std::shared_ptr<LogSink> log) const
{
    Gateway g = *this;
    g.log_ = std::move(log);
    return g;
}

CompletionRequest Gateway::request(std::string prompt, std::string tag) const
{
    return {std::move(prompt), options_.temperature, options_.max_output_tokens, std::move(tag)};
}

CompletionResponse Gateway::complete(const CompletionRequest& request)
{
    request.validate();
    LogRecord rec;
    rec.timestamp = clock_();
    rec.request_tag = request.request_tag;
    rec.model = transport_->model();
    rec.prompt = request.prompt_text;

    auto backoff = options_.retry.backoff_base;
    for (int attempt = 1;; ++attempt) {
        try {
            in_flight_->acquire();
            CompletionResponse resp;
            try {
                resp = transport_->send(request);
            } catch (...) {
                in_flight_->release();
                throw;
            }
            in_flight_->release();
            rec.raw_response = resp.raw_text;
            rec.status = "ok";
            rec.latency_ms = resp.latency_ms;
            log_->append(std::move(rec));
            return resp;
        } catch (const Error& e) {
            const bool retryable = e.code() == Errc::TransportError || e.code() == Errc::Timeout;
            if (retryable && attempt < options_.retry.max_attempts) {
                spdlog::warn("{} request failed (attempt {}/{}): {}", request.request_tag, attempt,
                             options_.retry.max_attempts, e.what());
                sleep_(backoff);
                backoff *= 2;
                continue;
            }
            rec.status = std::string(to_string(e.code()));
            log_->append(std::move(rec));
            throw;
        } catch (const std::exception& e) {
            rec.status = std::string(to_string(Errc::TransportError));
            log_->append(std::move(rec));
            throw Error(Errc::TransportError, e.what());
        }
    }
}

JsonCompletion Gateway::complete_json(const CompletionRequest& request)
{
    auto resp = complete(request);
    try {
        auto ex = extract_json(resp.raw_text);
        return {std::move(ex.value), std::move(resp), 1};
    } catch (const Error& e) {
        if (e.code() != Errc::NoJsonFound && e.code() != Errc::MalformedJson)
            throw;
        spdlog::warn("{} response had no usable JSON, asking again", request.request_tag);
    }
    CompletionRequest again = request;
    again.prompt_text += kJsonOnlyInstruction;
    auto resp2 = complete(again);
    auto ex = extract_json(resp2.raw_text);
    return {std::move(ex.value), std::move(resp2), 2};
}

}  // namespace cloze::llm
