#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "clozegen/evalkit.hpp"
#include "clozegen/pipeline.hpp"

namespace httplib {
class Server;
}

namespace cloze::review {

/// Append-only JSON Lines file of verdicts. The in-memory view keeps the
/// last verdict per (reviewer, target) at the position of the first one.
/// Writers are serialized; readers get immutable snapshots.
class RatingsStore {
public:
    /// Replays an existing file (missing file = empty store).
    explicit RatingsStore(std::string path);
    ~RatingsStore();

    /// Validates, appends one line and flushes it.
    void append(const eval::ReviewRecord& record);

    std::shared_ptr<const std::vector<eval::ReviewRecord>> snapshot() const;
    void flush();

    static std::string to_line(const eval::ReviewRecord& record);
    static eval::ReviewRecord from_line(std::string_view line);

private:
    void apply(const eval::ReviewRecord& record);

    std::string path_;
    std::mutex write_mutex_;
    std::FILE* file_ = nullptr;
    std::vector<eval::ReviewRecord> records_;
    std::map<std::pair<std::string, std::string>, std::size_t> index_;

    mutable std::shared_mutex snap_mutex_;
    std::shared_ptr<const std::vector<eval::ReviewRecord>> snapshot_;
};

struct Target {
    std::string name;       // "stem" | "distractor_1".."distractor_3"
    std::string target_id;  // "item-7/stem", "item-7/d2"
    eval::TargetKind kind = eval::TargetKind::Stem;
    std::string word;       // distractor surface, empty for the stem
};

/// Stem plus its non-N/A distractors.
std::vector<Target> targets_of(const pipeline::OutputRow& row);

/// Key and distractors (N/A slots dropped) in the order shown to every
/// reviewer: a permutation drawn from the run seed forked by item id.
std::vector<std::string> shuffled_options(const pipeline::OutputRow& row, std::uint64_t run_seed);

struct ServiceConfig {
    std::string output_csv_path;
    std::string ratings_path;
    std::string bind_host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::uint64_t run_seed = 0;
    std::string ui_dir;  // served at / when it exists
};

struct Session {
    std::string session_id;
    std::string reviewer_id;
    std::string started_at;
};

inline constexpr const char* kReviewerHeader = "X-Reviewer-Id";

class ReviewService {
public:
    /// Throws MalformedOutputFile / IoError.
    explicit ReviewService(ServiceConfig config);
    ~ReviewService();

    ReviewService(const ReviewService&) = delete;
    ReviewService& operator=(const ReviewService&) = delete;

    /// Binds and serves on a background thread; returns the bound port.
    /// Throws BindError.
    int start();
    /// Stops accepting requests and flushes the ratings store.
    void stop();
    /// Blocks until stop() is called from elsewhere.
    void wait();

    int port() const { return port_; }
    const std::vector<pipeline::OutputRow>& items() const { return rows_; }
    RatingsStore& store() { return *store_; }

    /// Number of targets across all items.
    std::size_t target_count() const { return target_kinds_.size(); }
    bool completed(const std::string& reviewer) const;

private:
    void routes();
    const pipeline::OutputRow* find_item(int id) const;
    Session& session_for(const std::string& reviewer);
    nlohmann::ordered_json session_json(const std::string& reviewer);
    nlohmann::ordered_json item_json(const pipeline::OutputRow& row) const;

    ServiceConfig config_;
    std::vector<pipeline::OutputRow> rows_;
    std::map<std::string, eval::TargetKind> target_kinds_;
    std::unique_ptr<RatingsStore> store_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;

    std::mutex session_mutex_;
    std::map<std::string, Session> sessions_;
};

}  // namespace cloze::review
