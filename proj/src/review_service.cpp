#include "clozegen/review_service.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <set>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "clozegen/error.hpp"
#include "clozegen/llm_gateway.hpp"
#include "clozegen/rng.hpp"
#include "clozegen/text.hpp"

namespace cloze::review {

// ---------------------------------------------------------------- store

RatingsStore::RatingsStore(std::string path) : path_(std::move(path))
{
    if (std::filesystem::exists(path_)) {
        const std::string content = text::read_file(path_);
        std::size_t line_no = 0;
        for (const auto& raw : text::split(content, '\n')) {
            ++line_no;
            if (text::trim(raw).empty())
                continue;
            try {
                apply(from_line(raw));
            } catch (const Error& e) {
                throw Error(e.code(), path_ + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
    }
    file_ = std::fopen(path_.c_str(), "ab");
    if (!file_)
        throw Error(Errc::IoError, "cannot open ratings store " + path_);
    snapshot_ = std::make_shared<const std::vector<eval::ReviewRecord>>(records_);
}

RatingsStore::~RatingsStore()
{
    if (file_)
        std::fclose(file_);
}

std::string RatingsStore::to_line(const eval::ReviewRecord& r)
{
    nlohmann::ordered_json j;
    j["target_id"] = r.target_id;
    j["target_kind"] = eval::to_string(r.target_kind);
    j["reviewer_id"] = r.reviewer_id;
    j["verdict"] = eval::to_string(r.verdict);
    j["comment"] = r.comment;
    return j.dump();
}

eval::ReviewRecord RatingsStore::from_line(std::string_view line)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::MalformedJson, e.what());
    }
    auto str = [&](const char* name) {
        if (!j.is_object() || !j.contains(name) || !j[name].is_string())
            throw Error(Errc::MalformedJson, std::string("missing string field ") + name);
        return j[name].get<std::string>();
    };
    eval::ReviewRecord r{str("target_id"), eval::parse_target_kind(str("target_kind")), str("reviewer_id"),
                         eval::parse_verdict(str("verdict")), str("comment")};
    r.validate();
    return r;
}

void RatingsStore::apply(const eval::ReviewRecord& record)
{
    auto key = std::make_pair(record.reviewer_id, record.target_id);
    if (auto it = index_.find(key); it != index_.end()) {
        records_[it->second] = record;
        return;
    }
    index_.emplace(std::move(key), records_.size());
    records_.push_back(record);
}

void RatingsStore::append(const eval::ReviewRecord& record)
{
    record.validate();
    std::lock_guard lock(write_mutex_);
    const std::string line = to_line(record) + "\n";
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0)
        throw Error(Errc::IoError, "cannot write ratings store " + path_);
    apply(record);
    auto next = std::make_shared<const std::vector<eval::ReviewRecord>>(records_);
    std::unique_lock snap(snap_mutex_);
    snapshot_ = std::move(next);
}

std::shared_ptr<const std::vector<eval::ReviewRecord>> RatingsStore::snapshot() const
{
    std::shared_lock snap(snap_mutex_);
    return snapshot_;
}

void RatingsStore::flush()
{
    std::lock_guard lock(write_mutex_);
    if (file_)
        std::fflush(file_);
}

// ---------------------------------------------------------------- items

std::vector<Target> targets_of(const pipeline::OutputRow& row)
{
    const std::string prefix = "item-" + std::to_string(row.item_id) + "/";
    std::vector<Target> out{{"stem", prefix + "stem", eval::TargetKind::Stem, {}}};
    for (std::size_t k = 0; k < row.distractors.size(); ++k) {
        if (row.distractors[k] == pipeline::kNotAvailable)
            continue;
        out.push_back({"distractor_" + std::to_string(k + 1), prefix + "d" + std::to_string(k + 1),
                       eval::TargetKind::Distractor, row.distractors[k]});
    }
    return out;
}

std::vector<std::string> shuffled_options(const pipeline::OutputRow& row, std::uint64_t run_seed)
{
    std::vector<std::string> options{row.key};
    for (const auto& d : row.distractors)
        if (d != pipeline::kNotAvailable)
            options.push_back(d);
    Rng rng = Rng(run_seed).fork(static_cast<std::uint64_t>(row.item_id));
    std::vector<std::string> out;
    for (std::size_t i : rng.sample_indices(options.size(), options.size()))
        out.push_back(options[i]);
    return out;
}

// ---------------------------------------------------------------- service

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::ordered_json& body)
{
    res.status = status;
    res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message)
{
    nlohmann::ordered_json j;
    j["error"] = code;
    j["message"] = message;
    send_json(res, status, j);
}

std::optional<int> parse_id(const std::string& s)
{
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        return std::nullopt;
    return v;
}

std::string reviewer_of(const httplib::Request& req)
{
    if (req.has_header(kReviewerHeader))
        return text::trim(req.get_header_value(kReviewerHeader));
    if (req.has_param("reviewer_id"))
        return text::trim(req.get_param_value("reviewer_id"));
    return {};
}

}  // namespace

ReviewService::ReviewService(ServiceConfig config) : config_(std::move(config))
{
    rows_ = pipeline::read_output_csv(config_.output_csv_path);
    for (const auto& row : rows_)
        for (const auto& t : targets_of(row))
            target_kinds_.emplace(t.target_id, t.kind);
    store_ = std::make_unique<RatingsStore>(config_.ratings_path);
    for (const auto& r : *store_->snapshot())
        if (!target_kinds_.count(r.target_id))
            spdlog::warn("ratings store mentions unknown target {}", r.target_id);
    server_ = std::make_unique<httplib::Server>();
    // httplib's defaults add SO_REUSEPORT, which lets a second service share the port
    server_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    routes();
}

ReviewService::~ReviewService()
{
    stop();
}

const pipeline::OutputRow* ReviewService::find_item(int id) const
{
    for (const auto& row : rows_)
        if (row.item_id == id)
            return &row;
    return nullptr;
}

Session& ReviewService::session_for(const std::string& reviewer)
{
    std::lock_guard lock(session_mutex_);
    auto it = sessions_.find(reviewer);
    if (it == sessions_.end())
        it = sessions_.emplace(reviewer, Session{"session-" + reviewer, reviewer, llm::utc_timestamp()}).first;
    return it->second;
}

bool ReviewService::completed(const std::string& reviewer) const
{
    std::size_t rated = 0;
    for (const auto& r : *store_->snapshot())
        if (r.reviewer_id == reviewer && target_kinds_.count(r.target_id))
            ++rated;
    return !target_kinds_.empty() && rated == target_kinds_.size();
}

nlohmann::ordered_json ReviewService::session_json(const std::string& reviewer)
{
    const Session s = session_for(reviewer);
    const auto snap = store_->snapshot();
    std::set<std::string> rated;
    for (const auto& r : *snap)
        if (r.reviewer_id == reviewer && target_kinds_.count(r.target_id))
            rated.insert(r.target_id);

    nlohmann::ordered_json cursor = nullptr;
    for (const auto& row : rows_) {
        const auto ts = targets_of(row);
        if (std::any_of(ts.begin(), ts.end(), [&](const Target& t) { return !rated.count(t.target_id); })) {
            cursor = row.item_id;
            break;
        }
    }
    nlohmann::ordered_json j;
    j["session_id"] = s.session_id;
    j["reviewer_id"] = s.reviewer_id;
    j["started_at"] = s.started_at;
    j["rated"] = rated.size();
    j["total"] = target_kinds_.size();
    j["cursor"] = cursor;
    j["completed"] = rated.size() == target_kinds_.size();
    return j;
}

nlohmann::ordered_json ReviewService::item_json(const pipeline::OutputRow& row) const
{
    nlohmann::ordered_json j;
    j["item_id"] = row.item_id;
    j["stem"] = row.stem;
    j["options"] = shuffled_options(row, config_.run_seed);
    return j;
}

void ReviewService::routes()
{
    auto& srv = *server_;

    if (!config_.ui_dir.empty()) {
        if (std::filesystem::is_directory(config_.ui_dir))
            srv.set_mount_point("/", config_.ui_dir);
        else
            spdlog::warn("UI directory {} not found; serving the API only", config_.ui_dir);
    }

    srv.Get("/items", [this](const httplib::Request&, httplib::Response& res) {
        nlohmann::ordered_json j;
        j["count"] = rows_.size();
        j["items"] = nlohmann::ordered_json::array();
        for (const auto& row : rows_)
            j["items"].push_back(item_json(row));
        send_json(res, 200, j);
    });

    srv.Get(R"(/items/(-?\d+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto id = parse_id(req.matches[1]);
        const auto* row = id ? find_item(*id) : nullptr;
        if (!row)
            return send_error(res, 404, "NotFound", "no item " + std::string(req.matches[1]));

        auto j = item_json(*row);
        j["targets"] = nlohmann::ordered_json::array();
        for (const auto& t : targets_of(*row)) {
            nlohmann::ordered_json tj;
            tj["target"] = t.name;
            tj["target_id"] = t.target_id;
            tj["target_kind"] = eval::to_string(t.kind);
            if (!t.word.empty())
                tj["word"] = t.word;
            j["targets"].push_back(std::move(tj));
        }

        const std::string reviewer = reviewer_of(req);
        if (!reviewer.empty()) {
            session_for(reviewer);
            nlohmann::ordered_json verdicts = nlohmann::ordered_json::object();
            const auto snap = store_->snapshot();
            for (const auto& t : targets_of(*row))
                for (const auto& r : *snap)
                    if (r.reviewer_id == reviewer && r.target_id == t.target_id)
                        verdicts[t.name] = {{"verdict", eval::to_string(r.verdict)}, {"comment", r.comment}};
            j["reviewer_id"] = reviewer;
            j["verdicts"] = std::move(verdicts);
        }
        send_json(res, 200, j);
    });

    srv.Post(R"(/items/(-?\d+)/verdicts)", [this](const httplib::Request& req, httplib::Response& res) {
        const auto id = parse_id(req.matches[1]);
        const auto* row = id ? find_item(*id) : nullptr;
        if (!row)
            return send_error(res, 404, "NotFound", "no item " + std::string(req.matches[1]));

        nlohmann::json body;
        try {
            body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::exception& e) {
            return send_error(res, 400, "MalformedJson", e.what());
        }
        auto field = [&](const char* name) -> std::string {
            if (!body.is_object() || !body.contains(name) || body[name].is_null())
                return {};
            return body[name].is_string() ? body[name].get<std::string>() : body[name].dump();
        };

        std::string reviewer = text::trim(field("reviewer_id"));
        const std::string header = reviewer_of(req);
        if (reviewer.empty())
            reviewer = header;
        if (reviewer.empty())
            return send_error(res, 400, "InvalidArgument", "reviewer_id is required");
        if (!header.empty() && header != reviewer)
            return send_error(res, 400, "InvalidArgument", "reviewer_id does not match the X-Reviewer-Id header");

        const std::string target_name = text::trim(field("target"));
        const auto targets = targets_of(*row);
        auto t = std::find_if(targets.begin(), targets.end(), [&](const Target& x) { return x.name == target_name; });
        if (t == targets.end())
            return send_error(res, 400, "InvalidArgument", "unknown target '" + target_name + "' for this item");

        eval::ReviewRecord record;
        record.target_id = t->target_id;
        record.target_kind = t->kind;
        record.reviewer_id = reviewer;
        record.comment = field("comment");
        try {
            record.verdict = eval::parse_verdict(field("verdict"));
        } catch (const Error& e) {
            return send_error(res, 400, "InvalidArgument", e.what());
        }
        if (record.verdict == eval::Verdict::Inappropriate && text::trim(record.comment).empty())
            return send_error(res, 422, "CommentRequired", "an inappropriate verdict needs a comment");

        try {
            session_for(reviewer);
            store_->append(record);
        } catch (const Error& e) {
            return send_error(res, e.code() == Errc::InvalidArgument ? 422 : 500, to_string(e.code()), e.what());
        }
        nlohmann::ordered_json j;
        j["ok"] = true;
        j["target_id"] = record.target_id;
        j["session"] = session_json(reviewer);
        send_json(res, 200, j);
    });

    srv.Get("/session", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string reviewer = reviewer_of(req);
        if (reviewer.empty())
            return send_error(res, 400, "InvalidArgument", std::string(kReviewerHeader) + " header is required");
        send_json(res, 200, session_json(reviewer));
    });

    srv.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
        try {
            res.status = 200;
            res.set_content(eval::report_json(*store_->snapshot()), "application/json");
        } catch (const Error& e) {
            send_error(res, e.code() == Errc::InsufficientOverlap ? 409 : 500, to_string(e.code()), e.what());
        }
    });

    srv.Get("/export", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string reviewer = reviewer_of(req);
        if (reviewer.empty())
            return send_error(res, 403, "Forbidden",
                              std::string(kReviewerHeader) + " of a reviewer who has completed the session is required");
        if (!completed(reviewer))
            return send_error(res, 403, "Forbidden", reviewer + " has not rated every target yet");
        res.status = 200;
        res.set_content(eval::format_ratings_csv(*store_->snapshot()), "text/csv");
    });
}

int ReviewService::start()
{
    if (config_.port == 0) {
        port_ = server_->bind_to_any_port(config_.bind_host);
        if (port_ < 0)
            throw Error(Errc::BindError, "cannot bind " + config_.bind_host);
    } else {
        if (!server_->bind_to_port(config_.bind_host, config_.port))
            throw Error(Errc::BindError, "cannot bind " + config_.bind_host + ":" + std::to_string(config_.port));
        port_ = config_.port;
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void ReviewService::stop()
{
    if (server_)
        server_->stop();
    if (thread_.joinable())
        thread_.join();
    if (store_)
        store_->flush();
}

void ReviewService::wait()
{
    if (thread_.joinable())
        thread_.join();
    if (store_)
        store_->flush();
}

}  // namespace cloze::review
