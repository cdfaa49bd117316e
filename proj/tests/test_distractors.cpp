#include <doctest.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <set>

#include "clozegen/distractors.hpp"
#include "clozegen/error.hpp"
#include "clozegen/llm_gateway.hpp"
#include "clozegen/morphology.hpp"
#include "clozegen/rng.hpp"
#include "clozegen/stem.hpp"
#include "clozegen/wordlist.hpp"
#include "support.hpp"

using namespace cloze;
using namespace cloze::distractors;

namespace {

const TaggedKey kCreates{"creates", PosTag::VBZ, "create"};

stem::QuestionStem worked_stem()
{
    return stem::blank_out(stem::parse_sentence("National income `creates` economic growth and development in a country."),
                           kCreates);
}

WordGroupSet worked_groups()
{
    return wordlist::load_word_groups(testing::fixture("worked_example/groups.csv"));
}

llm::TranscriptStore worked_store()
{
    return llm::TranscriptStore::load(testing::fixture("worked_example/transcripts.jsonl"));
}

std::string recorded(const llm::TranscriptStore& store, const std::string& tag, int which = 0)
{
    for (const auto& e : store.entries())
        if (e.request_tag == tag && which-- == 0)
            return e.prompt;
    FAIL("missing transcript entry");
    return {};
}

std::string recorded_response(const llm::TranscriptStore& store, const std::string& tag)
{
    for (const auto& e : store.entries())
        if (e.request_tag == tag)
            return e.response;
    FAIL("missing transcript entry");
    return {};
}

llm::Gateway quiet(std::shared_ptr<llm::Transport> t)
{
    llm::Gateway g(std::move(t), {});
    g.set_sleeper([](std::chrono::milliseconds) {});
    g.set_clock([] { return std::string("T"); });
    return g;
}

Errc code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return Errc::InvalidArgument;
}

CandidatePool pool_of(const std::vector<std::string>& words)
{
    CandidatePool p;
    p.key = kCreates;
    for (const auto& w : words)
        p.candidates.push_back({w, PosTag::VBZ, w});
    return p;
}

}  // namespace

TEST_CASE("good-distractor rule truth table")
{
    const std::vector<JudgmentVerdict> all = {
        {"tt", true, true}, {"tf", true, false}, {"ft", false, true}, {"ff", false, false}};
    for (const auto& v : all) {
        const bool expected = v.syntax_ok && !v.semantics_ok;
        CHECK(filter_good({v}).size() == (expected ? 1u : 0u));
    }
    CHECK(filter_good(all) == std::vector<std::string>{"tf"});
}

TEST_CASE("the worked-example pool holds the ten VBZ forms in group order")
{
    const auto groups = worked_groups();
    Rng rng(1);
    const auto pool = draw_pool(kCreates, groups, 10, rng, {});
    std::vector<std::string> words;
    std::set<std::string> heads;
    for (const auto& c : pool.candidates) {
        words.push_back(c.surface);
        heads.insert(c.headword);
        CHECK(c.tag == PosTag::VBZ);
    }
    CHECK(words == std::vector<std::string>{"sectors", "varies", "estimates", "derives", "processes", "functions",
                                            "legislates", "requires", "indicates", "assumes"});
    CHECK(heads.size() == 10);
    CHECK_FALSE(pool.exhausted);
}

TEST_CASE("judgment prompt matches the recorded prompt byte for byte")
{
    const auto groups = worked_groups();
    Rng rng(1);
    const auto pool = draw_pool(kCreates, groups, 10, rng, {});
    CHECK(build_judgment_prompt(worked_stem(), pool) == recorded(worked_store(), "judgment"));
}

TEST_CASE("judgment prompt with a single candidate and an empty pool")
{
    const auto one = build_judgment_prompt(worked_stem(), pool_of({"sectors"}));
    CHECK(one.find("Words: ```sectors```") != std::string::npos);
    CHECK(code_of([] { build_judgment_prompt(worked_stem(), pool_of({})); }) == Errc::InvalidArgument);
}

TEST_CASE("whole-sentence variant lists each filled sentence")
{
    const auto p = build_whole_sentence_prompt(worked_stem(), pool_of({"sectors", "varies"}));
    CHECK(p.find("National income sectors economic growth and development in a country.") != std::string::npos);
    CHECK(p.find("National income varies economic growth and development in a country.") != std::string::npos);
}

TEST_CASE("the recorded verdicts give the seven good distractors")
{
    const auto groups = worked_groups();
    Rng rng(1);
    const auto pool = draw_pool(kCreates, groups, 10, rng, {});
    const auto verdicts = parse_verdicts(recorded_response(worked_store(), "judgment"), pool);
    REQUIRE(verdicts.size() == 10);
    CHECK(verdicts[0] == JudgmentVerdict{"sectors", true, false});
    CHECK(filter_good(verdicts) == std::vector<std::string>{"sectors", "estimates", "derives", "processes",
                                                            "functions", "legislates", "requires"});
}

TEST_CASE("verdict parsing errors")
{
    const auto pool = pool_of({"sectors", "assumes"});
    CHECK(code_of([&] { parse_verdicts(R"({"sectors": {"syntax": true, "semantics": false}})", pool); }) ==
          Errc::MissingVerdict);
    CHECK(code_of([&] {
              parse_verdicts(R"({"sectors": {"syntax": "yes", "semantics": false},
                                 "assumes": {"syntax": true, "semantics": true}})",
                             pool);
          }) == Errc::NonBooleanField);
    CHECK(code_of([&] { parse_verdicts(R"({"sectors": true, "assumes": true})", pool); }) == Errc::NonBooleanField);
    CHECK(code_of([&] { interpret_verdicts(nlohmann::json::array({1, 2}), pool); }) == Errc::MalformedJson);
    CHECK(code_of([&] { parse_verdicts("no json at all", pool); }) == Errc::NoJsonFound);

    const auto extra = parse_verdicts(R"({"sectors": {"syntax": true, "semantics": false},
                                          "assumes": {"syntax": false, "semantics": false},
                                          "bonus": {"syntax": true, "semantics": false}})",
                                      pool);
    CHECK(extra.size() == 2);
}

TEST_CASE("draw_pool excludes tried groups and reports exhaustion")
{
    const auto groups = worked_groups();
    Rng rng(3);
    const std::set<std::string> all = {"sectors",   "varies",     "estimates", "derives",   "processes",
                                       "functions", "legislates", "requires",  "indicates", "assumes"};
    const auto empty = draw_pool(kCreates, groups, 10, rng, all);
    CHECK(empty.candidates.empty());
    CHECK(empty.exhausted);

    const auto some = draw_pool(kCreates, groups, 10, rng, {"sectors", "varies"});
    CHECK(some.candidates.size() == 8);
    CHECK(some.exhausted);

    const auto small = draw_pool(kCreates, groups, 4, rng, {});
    CHECK(small.candidates.size() == 4);
    CHECK_FALSE(small.exhausted);
}

TEST_CASE("draw_pool never returns a form of the key's own group")
{
    WordGroupSet groups{{{"labour", 1, {{PosTag::NN, {"labour"}}, {PosTag::VBZ, {"labours"}}}},
                         {"labours", 1, {{PosTag::VBZ, {"labours"}}}},
                         {"require", 1, {{PosTag::VBZ, {"requires"}}}}},
                        ""};
    Rng rng(5);
    const auto pool = draw_pool({"labours", PosTag::VBZ, "labour"}, groups, 10, rng, {});
    REQUIRE(pool.candidates.size() == 1);
    CHECK(pool.candidates[0].surface == "requires");
}

TEST_CASE("draw_pool properties over the AWL groups")
{
    morph::Morphology m;
    WordGroupSet groups;
    for (const auto& e : wordlist::read_headword_list(testing::source_file("data/awl_sublist1.csv")))
        groups.groups.push_back(m.build_word_group(e));

    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Rng rng(seed);
        const auto& g = groups.groups[rng.below(groups.size())];
        const auto key = stem::pick_key(g, rng);
        const auto pool = draw_pool(key, groups, 10, rng, {}, &m);
        std::set<std::string> heads, lemmas;
        const auto key_lemma = m.lemma_of(key.surface, key.tag).lemma;
        for (const auto& c : pool.candidates) {
            CHECK(c.tag == key.tag);
            CHECK(c.headword != key.headword);
            CHECK(heads.insert(c.headword).second);
            const auto lemma = m.lemma_of(c.surface, c.tag).lemma;
            CHECK(lemma != key_lemma);
            CHECK(lemmas.insert(lemma).second);
            CHECK(groups.find(c.headword)->inflections.at(key.tag).count(c.surface) == 1);
        }
        CHECK(pool.candidates.size() <= 10);
        CHECK(pool.exhausted == (pool.candidates.size() < 10));

        Rng again(seed);
        const auto& g2 = groups.groups[again.below(groups.size())];
        const auto key2 = stem::pick_key(g2, again);
        const auto pool2 = draw_pool(key2, groups, 10, again, {}, &m);
        CHECK(pool2.candidates == pool.candidates);
    }
}

TEST_CASE("selecting from the recorded exchange picks three of the seven, deterministically")
{
    const auto groups = worked_groups();
    const std::set<std::string> seven = {"sectors", "estimates", "derives", "processes",
                                         "functions", "legislates", "requires"};
    std::vector<TaggedKey> first;
    for (int run = 0; run < 2; ++run) {
        auto g = quiet(llm::replay_transport(worked_store()));
        Rng rng(11);
        const auto set = select_distractors(worked_stem(), kCreates, groups, g, rng);
        CHECK(set.distractors.size() == 3);
        CHECK(set.shortfall == 0);
        CHECK(set.rounds_used == 1);
        CHECK(g.calls() == 1);
        for (const auto& d : set.distractors) {
            CHECK(seven.count(d.surface) == 1);
            CHECK(d.tag == PosTag::VBZ);
        }
        if (run == 0)
            first = set.distractors;
        else
            CHECK(set.distractors == first);
    }
}

TEST_CASE("a pre-exhausted pool costs no gateway calls")
{
    WordGroupSet groups{{{"create", 1, {{PosTag::VBZ, {"creates"}}}}, {"area", 1, {{PosTag::NN, {"area"}}}}}, ""};
    auto transport = std::make_shared<testing::ScriptedTransport>();
    auto g = quiet(transport);
    Rng rng(1);
    const auto set = select_distractors(worked_stem(), kCreates, groups, g, rng);
    CHECK(set.distractors.empty());
    CHECK(set.shortfall == 3);
    CHECK(set.depleted);
    CHECK(transport->calls == 0);
}

TEST_CASE("gateway errors propagate out of selection")
{
    auto g = quiet(llm::replay_transport(llm::TranscriptStore{}));
    Rng rng(1);
    CHECK(code_of([&] { select_distractors(worked_stem(), kCreates, worked_groups(), g, rng); }) == Errc::ReplayMiss);
}

TEST_CASE("accumulated good set matches a brute-force scan on random pools")
{
    Rng meta(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n_groups = 1 + meta.below(12);
        WordGroupSet groups;
        groups.groups.push_back({"create", 1, {{PosTag::VBZ, {"creates"}}}});
        std::map<std::string, std::pair<bool, bool>> truth;
        for (std::size_t i = 0; i < n_groups; ++i) {
            const std::string head = "w" + std::string(1, static_cast<char>('a' + i));
            const std::string form = head + "s";
            groups.groups.push_back({head, 1, {{PosTag::VBZ, {form}}}});
            truth[form] = {meta.below(2) == 1, meta.below(2) == 1};
        }

        std::mutex mu;
        std::vector<std::string> judged;
        auto transport = std::make_shared<testing::ScriptedTransport>([&](const llm::CompletionRequest& req) {
            nlohmann::json j = nlohmann::json::object();
            std::lock_guard lock(mu);
            for (const auto& w : testing::judgment_words(req.prompt_text)) {
                judged.push_back(w);
                j[w] = {{"syntax", truth.at(w).first}, {"semantics", truth.at(w).second}};
            }
            return j.dump();
        });
        auto g = quiet(transport);
        SelectionOptions opts;
        opts.pool_size = 1 + meta.below(10);
        opts.max_rounds = 100;
        Rng rng(static_cast<std::uint64_t>(trial));
        const auto set = select_distractors(worked_stem(), kCreates, groups, g, rng, opts);

        std::set<std::string> judged_set(judged.begin(), judged.end());
        REQUIRE(judged_set.size() == judged.size());

        std::set<std::string> brute_judged, brute_all;
        for (const auto& [w, v] : truth) {
            if (v.first && !v.second) {
                brute_all.insert(w);
                if (judged_set.count(w))
                    brute_judged.insert(w);
            }
        }
        std::set<std::string> chosen;
        for (const auto& d : set.distractors)
            chosen.insert(d.surface);
        REQUIRE(chosen.size() == set.distractors.size());
        CHECK(set.shortfall == static_cast<int>(3 - set.distractors.size()));

        if (brute_judged.size() >= 3) {
            CHECK(chosen.size() == 3);
            CHECK(std::includes(brute_judged.begin(), brute_judged.end(), chosen.begin(), chosen.end()));
        } else {
            CHECK(chosen == brute_judged);
            CHECK(chosen == brute_all);
            CHECK(set.depleted);
        }
    }
}
