#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <regex>
#include <string>

#include <nlohmann/json.hpp>

#include "clozegen/error.hpp"
#include "clozegen/llm_gateway.hpp"
#include "clozegen/text.hpp"

namespace testing {

inline std::string fixture(const std::string& rel)
{
    return std::string(CLOZEGEN_FIXTURE_DIR) + "/" + rel;
}

inline std::string source_file(const std::string& rel)
{
    return std::string(CLOZEGEN_SOURCE_DIR) + "/" + rel;
}

class TempDir {
public:
    TempDir()
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("clozegen-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// Words listed between "Words: ```" and the closing fence of a judgment prompt.
inline std::vector<std::string> judgment_words(const std::string& prompt)
{
    const auto start = prompt.find("Words: ```");
    if (start == std::string::npos)
        return {};
    const auto from = start + 10;
    const auto end = prompt.find("```", from);
    std::vector<std::string> out;
    for (auto& w : cloze::text::split(prompt.substr(from, end - from), ','))
        out.push_back(cloze::text::trim(w));
    return out;
}

inline std::string stem_word(const std::string& prompt)
{
    static const std::regex re(R"re(the word "([^"]+)")re");
    std::smatch m;
    if (!std::regex_search(prompt, m, re))
        return {};
    return m[1];
}

/// Stand-in model: a fixed sentence frame for stems and hash-derived
/// verdicts for judgments, so a 60-headword run is reproducible offline.
inline std::string scripted_reply(const cloze::llm::CompletionRequest& req)
{
    if (req.request_tag == "stem")
        return "Scholars noted that `" + stem_word(req.prompt_text) + "` mattered in this case.";
    if (req.request_tag == "judgment") {
        nlohmann::ordered_json j = nlohmann::ordered_json::object();
        for (const auto& w : judgment_words(req.prompt_text)) {
            const auto h = fnv1a(w);
            j[w] = {{"syntax", h % 5 != 0}, {"semantics", h % 3 == 0}};
        }
        return j.dump(2);
    }
    return "{}";
}

class ScriptedTransport final : public cloze::llm::Transport {
public:
    using Script = std::function<std::string(const cloze::llm::CompletionRequest&)>;

    explicit ScriptedTransport(Script script = scripted_reply) : script_(std::move(script)) {}

    cloze::llm::CompletionResponse send(const cloze::llm::CompletionRequest& request) override
    {
        ++calls;
        return {script_(request), 0, "scripted"};
    }
    std::string label() const override { return "scripted"; }
    std::string model() const override { return "scripted"; }

    std::atomic<int> calls{0};

private:
    Script script_;
};

}  // namespace testing
