#include "clozegen/distractors.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "clozegen/error.hpp"
#include "clozegen/morphology.hpp"
#include "clozegen/prompts.hpp"
#include "clozegen/text.hpp"

namespace cloze::distractors {

namespace {

std::string lemma_for(const std::string& form, PosTag tag, const std::string& headword,
                      const morph::Morphology* morphology)
{
    if (morphology) {
        auto r = morphology->lemma_of(form, tag);
        if (r.in_lexicon)
            return r.lemma;
    }
    return headword;
}

bool single_token(const std::string& form)
{
    return !form.empty() && form.find_first_of(", \t\n`") == std::string::npos;
}

}  // namespace

CandidatePool draw_pool(const TaggedKey& key, const WordGroupSet& groups, std::size_t size, Rng& rng,
                        const std::set<std::string>& already_tried, const morph::Morphology* morphology)
{
    const WordGroup* own = groups.find(key.headword);
    const std::string key_lemma = lemma_for(key.surface, key.tag, key.headword, morphology);

    struct Eligible {
        std::size_t group;
        std::vector<std::string> forms;
    };
    std::vector<Eligible> eligible;
    std::set<std::string> lemmas{key_lemma, key.headword};

    for (std::size_t gi = 0; gi < groups.groups.size(); ++gi) {
        const WordGroup& g = groups.groups[gi];
        if (g.headword == key.headword)
            continue;
        auto it = g.inflections.find(key.tag);
        if (it == g.inflections.end())
            continue;
        std::vector<std::string> forms;
        bool tried = false;
        for (const auto& f : it->second) {
            if (already_tried.count(f))
                tried = true;
            if (!single_token(f) || text::iequals(f, key.surface))
                continue;
            if (own && std::any_of(own->inflections.begin(), own->inflections.end(),
                                   [&](const auto& kv) { return kv.second.count(f) != 0; }))
                continue;
            forms.push_back(f);
        }
        if (tried || forms.empty())
            continue;
        const std::string lemma = lemma_for(forms.front(), key.tag, g.headword, morphology);
        if (!lemmas.insert(lemma).second || (lemma != g.headword && !lemmas.insert(g.headword).second))
            continue;
        eligible.push_back({gi, std::move(forms)});
    }

    CandidatePool pool;
    pool.key = key;
    pool.exhausted = eligible.size() < size;
    auto picked = rng.sample_indices(eligible.size(), size);
    std::sort(picked.begin(), picked.end());
    for (std::size_t idx : picked) {
        const auto& e = eligible[idx];
        const std::string& form = e.forms.size() == 1 ? e.forms.front() : e.forms[rng.below(e.forms.size())];
        pool.candidates.push_back({form, key.tag, groups.groups[e.group].headword});
    }
    return pool;
}

namespace {

std::vector<std::string> words_of(const CandidatePool& pool)
{
    std::vector<std::string> words;
    for (const auto& c : pool.candidates)
        words.push_back(c.surface);
    return words;
}

}  // namespace

std::string build_judgment_prompt(const stem::QuestionStem& stem, const CandidatePool& pool)
{
    if (pool.candidates.empty())
        throw Error(Errc::InvalidArgument, "judgment prompt needs at least one candidate");
    return text::substitute(prompts::judgment_template(),
                            {{"words", text::join(words_of(pool), ", ")}, {"masked_sentence", stem.text_with_blank}});
}

std::string build_whole_sentence_prompt(const stem::QuestionStem& stem, const CandidatePool& pool)
{
    if (pool.candidates.empty())
        throw Error(Errc::InvalidArgument, "judgment prompt needs at least one candidate");
    std::vector<std::string> lines;
    for (const auto& c : pool.candidates)
        lines.push_back(c.surface + ": " + stem::fill_blank(stem.text_with_blank, c.surface));
    return text::substitute(prompts::whole_sentence_template(),
                            {{"masked_sentence", stem.text_with_blank}, {"sentences", text::join(lines, "\n")}});
}

std::vector<JudgmentVerdict> interpret_verdicts(const nlohmann::json& value, const CandidatePool& pool)
{
    if (!value.is_object())
        throw Error(Errc::MalformedJson, "verdict block must be a JSON object");

    std::set<std::string> used;
    std::vector<JudgmentVerdict> out;
    for (const auto& c : pool.candidates) {
        auto it = value.find(c.surface);
        if (it == value.end()) {
            for (auto jt = value.begin(); jt != value.end(); ++jt) {
                if (text::iequals(jt.key(), c.surface) && !used.count(jt.key())) {
                    spdlog::warn("verdict key '{}' matched candidate '{}' ignoring case", jt.key(), c.surface);
                    it = jt;
                    break;
                }
            }
        }
        if (it == value.end())
            throw Error(Errc::MissingVerdict, c.surface);
        used.insert(it.key());

        const auto& v = *it;
        if (!v.is_object() || !v.contains("syntax") || !v.contains("semantics") || !v["syntax"].is_boolean() ||
            !v["semantics"].is_boolean())
            throw Error(Errc::NonBooleanField, "verdict for '" + c.surface + "' is " + v.dump());
        out.push_back({c.surface, v["syntax"].get<bool>(), v["semantics"].get<bool>()});
    }
    for (auto jt = value.begin(); jt != value.end(); ++jt)
        if (!used.count(jt.key()))
            spdlog::warn("ignoring verdict for '{}', which was not submitted", jt.key());
    return out;
}

std::vector<JudgmentVerdict> parse_verdicts(std::string_view raw, const CandidatePool& pool)
{
    return interpret_verdicts(llm::extract_json(raw).value, pool);
}

std::vector<std::string> filter_good(const std::vector<JudgmentVerdict>& verdicts)
{
    std::vector<std::string> out;
    for (const auto& v : verdicts)
        if (v.syntax_ok && !v.semantics_ok)
            out.push_back(v.word);
    return out;
}

DistractorSet select_distractors(const stem::QuestionStem& stem, const TaggedKey& key, const WordGroupSet& groups,
                                 llm::Gateway& gateway, Rng& rng, const SelectionOptions& options)
{
    DistractorSet result;
    std::set<std::string> tried;
    std::vector<TaggedKey> good;

    while (result.rounds_used < options.max_rounds) {
        const auto pool = draw_pool(key, groups, options.pool_size, rng, tried, options.morphology);
        if (pool.candidates.empty()) {
            result.depleted = true;
            break;
        }
        ++result.rounds_used;

        const std::string prompt = options.whole_sentence ? build_whole_sentence_prompt(stem, pool)
                                                          : build_judgment_prompt(stem, pool);
        const auto answer = gateway.complete_json(gateway.request(prompt, "judgment"));
        const auto verdicts = interpret_verdicts(answer.value, pool);

        for (std::size_t i = 0; i < pool.candidates.size(); ++i) {
            tried.insert(pool.candidates[i].surface);
            if (verdicts[i].syntax_ok && !verdicts[i].semantics_ok)
                good.push_back(pool.candidates[i]);
        }
        if (good.size() >= kDistractorsPerItem)
            break;
        if (pool.exhausted) {
            result.depleted = true;
            break;
        }
    }

    if (good.size() > kDistractorsPerItem) {
        auto picked = rng.sample_indices(good.size(), kDistractorsPerItem);
        std::sort(picked.begin(), picked.end());
        for (std::size_t idx : picked)
            result.distractors.push_back(good[idx]);
    } else {
        result.distractors = std::move(good);
    }
    result.shortfall = static_cast<int>(kDistractorsPerItem - result.distractors.size());
    return result;
}

}  // namespace cloze::distractors
