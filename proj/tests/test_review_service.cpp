#include <doctest.h>

#include <algorithm>
#include <set>
#include <thread>

#include <httplib.h>

#include "clozegen/error.hpp"
#include "clozegen/evalkit.hpp"
#include "clozegen/pipeline.hpp"
#include "clozegen/review_service.hpp"
#include "clozegen/rng.hpp"
#include "clozegen/text.hpp"
#include "clozegen/wordlist.hpp"
#include "review_ratings.hpp"
#include "support.hpp"

using namespace cloze;
using namespace cloze::review;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSeed = 17;

/// 60 items over the AWL headwords; item 60 has two N/A slots.
std::string sixty_items()
{
    const auto entries = wordlist::read_headword_list(testing::source_file("data/awl_sublist1.csv"));
    std::string out = std::string(pipeline::kOutputHeader) + "\n";
    for (int i = 1; i <= 60; ++i) {
        const auto& head = entries[i - 1].headword;
        const std::string d1 = entries[i % 60].headword;
        const std::string d2 = i == 60 ? "N/A" : entries[(i + 1) % 60].headword;
        const std::string d3 = i == 60 ? "N/A" : entries[(i + 2) % 60].headword;
        out += std::to_string(i) + "," + head + ",1," + head + ",NN,The ____ of item " + std::to_string(i) +
               " matters.," + d1 + "," + d2 + "," + d3 + "\n";
    }
    return out;
}

struct Fixture {
    testing::TempDir dir;
    ServiceConfig config;

    Fixture()
    {
        text::write_file(dir.file("output.csv"), sixty_items());
        config.output_csv_path = dir.file("output.csv");
        config.ratings_path = dir.file("ratings.jsonl");
        config.port = 0;
        config.run_seed = kSeed;
    }
};

httplib::Headers as(const std::string& reviewer)
{
    return {{kReviewerHeader, reviewer}};
}

json body_of(const httplib::Result& r)
{
    REQUIRE(r);
    return json::parse(r->body);
}

std::string target_name(const std::string& target_id)
{
    const auto slash = target_id.find('/');
    const auto tail = target_id.substr(slash + 1);
    return tail == "stem" ? "stem" : "distractor_" + tail.substr(1);
}

int item_of(const std::string& target_id)
{
    return std::stoi(target_id.substr(5, target_id.find('/') - 5));
}

int post_verdict(httplib::Client& cli, int item, const std::string& reviewer, const std::string& target,
                 const std::string& verdict, const std::string& comment)
{
    json b = {{"reviewer_id", reviewer}, {"target", target}, {"verdict", verdict}, {"comment", comment}};
    auto r = cli.Post("/items/" + std::to_string(item) + "/verdicts", b.dump(), "application/json");
    REQUIRE(r);
    return r->status;
}

void post_all(httplib::Client& cli, const std::vector<eval::ReviewRecord>& records)
{
    for (const auto& rec : records)
        REQUIRE(post_verdict(cli, item_of(rec.target_id), rec.reviewer_id, target_name(rec.target_id),
                             std::string(eval::to_string(rec.verdict)), rec.comment) == 200);
}

}  // namespace

TEST_CASE("targets and shuffled options")
{
    pipeline::OutputRow row;
    row.item_id = 5;
    row.key = "creates";
    row.stem = "National income ____ growth.";
    row.distractors = {"sectors", "N/A", "derives"};
    const auto ts = targets_of(row);
    REQUIRE(ts.size() == 3);
    CHECK(ts[0].target_id == "item-5/stem");
    CHECK(ts[1].target_id == "item-5/d1");
    CHECK(ts[1].word == "sectors");
    CHECK(ts[2].name == "distractor_3");
    CHECK(ts[2].target_id == "item-5/d3");

    const auto opts = shuffled_options(row, kSeed);
    CHECK(std::multiset<std::string>(opts.begin(), opts.end()) ==
          std::multiset<std::string>{"creates", "sectors", "derives"});
    CHECK(shuffled_options(row, kSeed) == opts);

    const std::vector<std::string> base = {"creates", "sectors", "derives"};
    auto perm = Rng(kSeed).fork(5).sample_indices(3, 3);
    std::vector<std::string> expected;
    for (auto i : perm)
        expected.push_back(base[i]);
    CHECK(opts == expected);
}

TEST_CASE("option order varies across items")
{
    pipeline::OutputRow row;
    row.key = "k";
    row.stem = "a ____ b";
    row.distractors = {"x", "y", "z"};
    std::set<std::vector<std::string>> orders;
    for (int id = 1; id <= 40; ++id) {
        row.item_id = id;
        orders.insert(shuffled_options(row, kSeed));
    }
    CHECK(orders.size() > 5);
}

TEST_CASE("ratings store replays, keeps last write and survives reopen")
{
    testing::TempDir dir;
    const auto path = dir.file("r.jsonl");
    {
        RatingsStore s(path);
        s.append({"item-1/stem", eval::TargetKind::Stem, "r1", eval::Verdict::Appropriate, ""});
        s.append({"item-2/stem", eval::TargetKind::Stem, "r1", eval::Verdict::Appropriate, ""});
        s.append({"item-1/stem", eval::TargetKind::Stem, "r1", eval::Verdict::Inappropriate, "odd"});
        CHECK(s.snapshot()->size() == 2);
        CHECK(s.snapshot()->at(0).verdict == eval::Verdict::Inappropriate);
        CHECK_THROWS_AS(s.append({"item-3/stem", eval::TargetKind::Stem, "r1", eval::Verdict::Inappropriate, ""}),
                        Error);
    }
    RatingsStore again(path);
    REQUIRE(again.snapshot()->size() == 2);
    CHECK(again.snapshot()->at(0).comment == "odd");
    CHECK(RatingsStore::from_line(RatingsStore::to_line(again.snapshot()->at(0))) == again.snapshot()->at(0));
}

TEST_CASE("malformed output files are rejected at start-up")
{
    testing::TempDir dir;
    text::write_file(dir.file("bad.csv"), "id,stem\n1,x\n");
    ServiceConfig c;
    c.output_csv_path = dir.file("bad.csv");
    c.ratings_path = dir.file("r.jsonl");
    try {
        ReviewService s(c);
        FAIL("expected MalformedOutputFile");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MalformedOutputFile);
    }
}

TEST_CASE("a busy port is a bind error")
{
    Fixture f;
    ReviewService first(f.config);
    const int port = first.start();
    auto c2 = f.config;
    c2.port = port;
    c2.ratings_path = f.dir.file("other.jsonl");
    ReviewService second(c2);
    try {
        second.start();
        FAIL("expected BindError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::BindError);
    }
}

TEST_CASE("items are listed with the key hidden among shuffled options")
{
    Fixture f;
    ReviewService svc(f.config);
    httplib::Client cli("127.0.0.1", svc.start());

    const auto list = body_of(cli.Get("/items"));
    CHECK(list["count"] == 60);
    REQUIRE(list["items"].size() == 60);
    const auto rows = pipeline::parse_output_csv(sixty_items());
    for (std::size_t i = 0; i < 60; ++i) {
        const auto& item = list["items"][i];
        const auto& row = rows[i];
        CHECK(item["item_id"] == row.item_id);
        CHECK(item["stem"] == row.stem);
        CHECK(item["options"].get<std::vector<std::string>>() == shuffled_options(row, kSeed));
        CHECK(item["options"].size() == (row.item_id == 60 ? 2u : 4u));
        CHECK_FALSE(item.contains("key"));
        CHECK(item.dump().find("\"NN\"") == std::string::npos);
    }

    const auto one = body_of(cli.Get("/items/3"));
    CHECK(one["item_id"] == 3);
    CHECK(one["targets"].size() == 4);
    CHECK(one["targets"][0]["target"] == "stem");
    CHECK_FALSE(one.contains("key"));

    auto missing = cli.Get("/items/999");
    REQUIRE(missing);
    CHECK(missing->status == 404);
}

TEST_CASE("verdicts: read-your-writes, validation and reviewer isolation")
{
    Fixture f;
    ReviewService svc(f.config);
    httplib::Client cli("127.0.0.1", svc.start());

    CHECK(post_verdict(cli, 4, "alice", "stem", "appropriate", "") == 200);
    CHECK(post_verdict(cli, 4, "alice", "distractor_2", "inappropriate", "fits the blank") == 200);
    CHECK(post_verdict(cli, 4, "bob", "stem", "inappropriate", "unclear context") == 200);

    const auto mine = body_of(cli.Get("/items/4", as("alice")));
    CHECK(mine["verdicts"]["stem"]["verdict"] == "appropriate");
    CHECK(mine["verdicts"]["distractor_2"]["comment"] == "fits the blank");
    CHECK(mine.dump().find("unclear context") == std::string::npos);

    const auto bobs = body_of(cli.Get("/items/4", as("bob")));
    CHECK(bobs["verdicts"].size() == 1);
    CHECK(bobs["verdicts"]["stem"]["verdict"] == "inappropriate");
    CHECK(bobs.dump().find("fits the blank") == std::string::npos);

    const auto anonymous = body_of(cli.Get("/items/4"));
    CHECK_FALSE(anonymous.contains("verdicts"));

    CHECK(post_verdict(cli, 4, "alice", "stem", "inappropriate", "") == 422);
    CHECK(post_verdict(cli, 4, "alice", "stem", "inappropriate", "   ") == 422);
    CHECK(post_verdict(cli, 4, "alice", "stem", "fine", "") == 400);
    CHECK(post_verdict(cli, 4, "alice", "distractor_9", "appropriate", "") == 400);
    CHECK(post_verdict(cli, 60, "alice", "distractor_2", "appropriate", "") == 400);
    CHECK(post_verdict(cli, 4, "", "stem", "appropriate", "") == 400);
    CHECK(post_verdict(cli, 999, "alice", "stem", "appropriate", "") == 404);
    auto bad = cli.Post("/items/4/verdicts", "{not json", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);

    CHECK(body_of(cli.Get("/items/4", as("alice")))["verdicts"]["stem"]["verdict"] == "appropriate");

    const auto session = body_of(cli.Get("/session", as("alice")));
    CHECK(session["rated"] == 2);
    CHECK(session["total"] == 238);
    CHECK(session["cursor"] == 1);
    CHECK(session["completed"] == false);
    auto no_reviewer = cli.Get("/session");
    REQUIRE(no_reviewer);
    CHECK(no_reviewer->status == 400);
}

TEST_CASE("stats need two overlapping reviewers")
{
    Fixture f;
    ReviewService svc(f.config);
    httplib::Client cli("127.0.0.1", svc.start());
    auto none = cli.Get("/stats");
    REQUIRE(none);
    CHECK(none->status == 409);
    post_verdict(cli, 1, "r1", "stem", "appropriate", "");
    auto one = cli.Get("/stats");
    REQUIRE(one);
    CHECK(one->status == 409);
    post_verdict(cli, 1, "r2", "stem", "appropriate", "");
    post_verdict(cli, 2, "r1", "stem", "inappropriate", "x");
    post_verdict(cli, 2, "r2", "stem", "inappropriate", "y");
    const auto stats = body_of(cli.Get("/stats"));
    CHECK(stats["kinds"][0]["kappa"] == 1.0);
    CHECK(stats["kinds"][0]["percent_agreement"] == 1.0);
}

TEST_CASE("full review: export gate, stats equal the offline report, persistence across restart")
{
    Fixture f;
    const auto records = testing::review_ratings();
    std::string stats_before;
    std::string exported;
    {
        ReviewService svc(f.config);
        REQUIRE(svc.target_count() == 238);
        httplib::Client cli("127.0.0.1", svc.start());

        auto early = cli.Get("/export", as("r1"));
        REQUIRE(early);
        CHECK(early->status == 403);

        post_all(cli, records);
        CHECK(body_of(cli.Get("/session", as("r1")))["completed"] == true);
        CHECK(body_of(cli.Get("/session", as("r3")))["completed"] == false);

        auto denied = cli.Get("/export", as("r3"));
        REQUIRE(denied);
        CHECK(denied->status == 403);
        auto anonymous = cli.Get("/export");
        REQUIRE(anonymous);
        CHECK(anonymous->status == 403);

        auto exp = cli.Get("/export", as("r1"));
        REQUIRE(exp);
        CHECK(exp->status == 200);
        exported = exp->body;
        CHECK(eval::parse_ratings_csv(exported) == records);

        auto stats = cli.Get("/stats");
        REQUIRE(stats);
        CHECK(stats->status == 200);
        stats_before = stats->body;
        CHECK(stats_before == eval::report_json(eval::parse_ratings_csv(exported)));
        CHECK(stats_before == eval::report_json(records));
        const auto j = json::parse(stats_before);
        CHECK(j["kinds"][0]["percent_agreement_exact"] == "53/60");
        CHECK(j["kinds"][0]["wellformedness_exact"] == "45/60");
        CHECK(j["kinds"][1]["wellformedness_exact"] == "119/178");
        svc.stop();
    }

    ReviewService again(f.config);
    httplib::Client cli("127.0.0.1", again.start());
    auto stats = cli.Get("/stats");
    REQUIRE(stats);
    CHECK(stats->body == stats_before);
    auto exp = cli.Get("/export", as("r2"));
    REQUIRE(exp);
    CHECK(exp->status == 200);
    CHECK(exp->body == exported);
}

TEST_CASE("concurrent reviewers do not lose verdicts")
{
    Fixture f;
    ReviewService svc(f.config);
    const int port = svc.start();
    auto worker = [port](std::string who) {
        httplib::Client cli("127.0.0.1", port);
        for (int i = 1; i <= 60; ++i)
            post_verdict(cli, i, who, "stem", "appropriate", "");
    };
    std::thread a(worker, "r1"), b(worker, "r2"), c(worker, "r3");
    a.join();
    b.join();
    c.join();
    CHECK(svc.store().snapshot()->size() == 180);
    svc.stop();
    RatingsStore reopened(f.config.ratings_path);
    CHECK(reopened.snapshot()->size() == 180);
}

TEST_CASE("the UI bundle is served at / when present")
{
    Fixture f;
    std::filesystem::create_directories(f.dir.path() / "ui");
    text::write_file(f.dir.file("ui/index.html"), "<!doctype html><title>review</title>");
    f.config.ui_dir = f.dir.file("ui");
    ReviewService svc(f.config);
    httplib::Client cli("127.0.0.1", svc.start());
    auto page = cli.Get("/index.html");
    REQUIRE(page);
    CHECK(page->status == 200);
    CHECK(page->body.find("review") != std::string::npos);
    CHECK(body_of(cli.Get("/items"))["count"] == 60);
}
