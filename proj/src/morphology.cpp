#include "clozegen/morphology.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "clozegen/error.hpp"
#include "clozegen/resources.hpp"
#include "clozegen/text.hpp"

namespace cloze::morph {

namespace {

bool is_vowel(char c)
{
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

bool consonant_y(std::string_view w)
{
    return w.size() >= 2 && w.back() == 'y' && !is_vowel(w[w.size() - 2]);
}

bool sibilant(std::string_view w)
{
    return text::ends_with(w, "s") || text::ends_with(w, "x") || text::ends_with(w, "z") ||
           text::ends_with(w, "ch") || text::ends_with(w, "sh");
}

bool parse_yes_no(const std::string& key, const std::string& value, std::size_t line)
{
    if (value == "yes")
        return true;
    if (value == "no")
        return false;
    throw Error(Errc::MalformedCsv,
                "lexicon line " + std::to_string(line) + ": " + key + " must be yes or no");
}

void add_forms(std::map<PosTag, FormSet>& p, PosTag tag, FormSet forms)
{
    if (!forms.empty())
        p[tag] = std::move(forms);
}

FormSet override_or(const LexiconEntry& e, PosTag tag, std::string fallback)
{
    if (auto it = e.overrides.find(tag); it != e.overrides.end())
        return it->second;
    return {std::move(fallback)};
}

struct SuffixRule {
    std::string_view suffix;
    bool noun, verb, adjective, adverb;
};

// Checked in order; the first matching suffix decides. Low-confidence only.
constexpr SuffixRule kSuffixRules[] = {
    {"ly", false, false, false, true},
    {"tion", true, false, false, false},
    {"sion", true, false, false, false},
    {"ment", true, false, false, false},
    {"ness", true, false, false, false},
    {"ity", true, false, false, false},
    {"ism", true, false, false, false},
    {"ship", true, false, false, false},
    {"ance", true, false, false, false},
    {"ence", true, false, false, false},
    {"ist", true, false, false, false},
    {"ogy", true, false, false, false},
    {"ize", false, true, false, false},
    {"ise", false, true, false, false},
    {"ify", false, true, false, false},
    {"ate", false, true, false, false},
    {"able", false, false, true, false},
    {"ible", false, false, true, false},
    {"ous", false, false, true, false},
    {"ful", false, false, true, false},
    {"less", false, false, true, false},
    {"ive", false, false, true, false},
    {"ical", false, false, true, false},
    {"ic", false, false, true, false},
    {"al", false, false, true, false},
    {"ant", false, false, true, false},
    {"ent", false, false, true, false},
    {"er", true, false, false, false},
    {"or", true, false, false, false},
};

}  // namespace

// ---------------------------------------------------------------- rules

int syllable_count(std::string_view word)
{
    int count = 0;
    bool prev_vowel = false;
    for (std::size_t i = 0; i < word.size(); ++i) {
        const char c = word[i];
        const bool v = is_vowel(c) || (c == 'y' && i > 0);
        if (v && !prev_vowel)
            ++count;
        prev_vowel = v;
    }
    // silent final e (make, large), but not -le (simple)
    if (count > 1 && word.size() > 2 && word.back() == 'e' && !is_vowel(word[word.size() - 2]) &&
        !text::ends_with(word, "le"))
        --count;
    return std::max(count, 1);
}

bool doubles_by_default(std::string_view w)
{
    if (w.size() < 3 || syllable_count(w) != 1)
        return false;
    const char last = w.back();
    const char mid = w[w.size() - 2];
    const char first = w[w.size() - 3];
    if (is_vowel(last) || last == 'w' || last == 'x' || last == 'y')
        return false;
    return is_vowel(mid) && !is_vowel(first);
}

std::string plural_of(std::string_view noun)
{
    std::string w(noun);
    if (consonant_y(w))
        return w.substr(0, w.size() - 1) + "ies";
    if (sibilant(w))
        return w + "es";
    return w + "s";
}

std::string third_person_of(std::string_view verb)
{
    return plural_of(verb);
}

std::string past_of(std::string_view verb, bool double_final)
{
    std::string w(verb);
    if (w.back() == 'e')
        return w + "d";
    if (consonant_y(w))
        return w.substr(0, w.size() - 1) + "ied";
    if (double_final)
        return w + w.back() + "ed";
    return w + "ed";
}

std::string gerund_of(std::string_view verb, bool double_final)
{
    std::string w(verb);
    if (text::ends_with(w, "ie"))
        return w.substr(0, w.size() - 2) + "ying";
    if (w.size() > 2 && w.back() == 'e' && !text::ends_with(w, "ee") && !text::ends_with(w, "ye") &&
        !text::ends_with(w, "oe"))
        return w.substr(0, w.size() - 1) + "ing";
    if (double_final)
        return w + w.back() + "ing";
    return w + "ing";
}

std::pair<std::string, std::string> comparative_of(std::string_view adjective, bool double_final)
{
    std::string w(adjective);
    if (w.back() == 'e')
        return {w + "r", w + "st"};
    if (consonant_y(w)) {
        const std::string stem = w.substr(0, w.size() - 1);
        return {stem + "ier", stem + "iest"};
    }
    if (double_final)
        return {w + w.back() + "er", w + w.back() + "est"};
    return {w + "er", w + "est"};
}

bool is_latin_plural(std::string_view form, std::string_view headword)
{
    if (text::ends_with(form, "ae") || text::ends_with(form, "\xC3\xA6"))
        return true;
    return text::ends_with(headword, "us") && text::ends_with(form, "i") &&
           form.size() == headword.size() - 1;
}

// ---------------------------------------------------------------- lexicon

Lexicon Lexicon::parse(std::string_view text_in)
{
    Lexicon lex;
    std::istringstream in{std::string(text_in)};
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = text::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty())
            continue;
        std::istringstream fields(body);
        LexiconEntry e;
        fields >> e.headword;
        e.headword = text::to_lower(e.headword);
        std::string tok;
        bool saw_pos = false;
        while (fields >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos)
                throw Error(Errc::MalformedCsv,
                            "lexicon line " + std::to_string(line) + ": expected key=value, got '" + tok + "'");
            const std::string key = tok.substr(0, eq);
            const std::string value = tok.substr(eq + 1);
            if (key == "pos") {
                saw_pos = true;
                for (const auto& fam : text::split(value, ',')) {
                    if (fam == "noun") e.noun = true;
                    else if (fam == "verb") e.verb = true;
                    else if (fam == "adj") e.adjective = true;
                    else if (fam == "adv") e.adverb = true;
                    else
                        throw Error(Errc::MalformedCsv, "lexicon line " + std::to_string(line) +
                                                            ": unknown family '" + fam + "'");
                }
            } else if (key == "countable") {
                e.countable = parse_yes_no(key, value, line);
            } else if (key == "double") {
                e.double_final = parse_yes_no(key, value, line);
            } else if (key == "graded") {
                e.graded = parse_yes_no(key, value, line);
            } else {
                const PosTag tag = parse_pos_tag_or_throw(key);
                FormSet forms;
                for (const auto& f : text::split(value, '|'))
                    if (!f.empty())
                        forms.insert(text::to_lower(f));
                e.overrides[tag] = std::move(forms);
            }
        }
        if (!saw_pos)
            throw Error(Errc::MalformedCsv, "lexicon line " + std::to_string(line) + ": missing pos=");
        if (lex.index_.count(e.headword))
            throw Error(Errc::DuplicateHeadword, "lexicon lists '" + e.headword + "' twice");
        lex.index_.emplace(e.headword, lex.entries_.size());
        lex.entries_.push_back(std::move(e));
    }
    return lex;
}

Lexicon Lexicon::load(const std::string& path)
{
    return parse(text::read_file(path));
}

const Lexicon& Lexicon::bundled()
{
    static const Lexicon lex = parse(resources::get("lexicon/english.lex"));
    return lex;
}

const LexiconEntry* Lexicon::find(std::string_view headword) const
{
    auto it = index_.find(headword);
    return it == index_.end() ? nullptr : &entries_[it->second];
}

// ---------------------------------------------------------------- engine

Morphology::Morphology() : Morphology(Lexicon::bundled()) {}

Morphology::Morphology(Lexicon lexicon) : lexicon_(std::move(lexicon))
{
    for (const auto& e : lexicon_.entries())
        for (const auto& [tag, forms] : paradigm_for(e))
            for (const auto& f : forms)
                lemma_index_.emplace(std::make_pair(f, tag), e.headword);
}

std::map<PosTag, FormSet> Morphology::paradigm_for(const LexiconEntry& e) const
{
    const std::string& h = e.headword;
    const bool dbl = e.double_final.value_or(doubles_by_default(h));
    std::map<PosTag, FormSet> p;

    if (e.noun) {
        p[PosTag::NN] = {h};
        if (e.countable) {
            FormSet plural = override_or(e, PosTag::NNS, plural_of(h));
            // singular never under NNS; Latin plurals yield to the regular one
            plural.erase(h);
            FormSet regular;
            for (const auto& f : plural)
                if (!is_latin_plural(f, h))
                    regular.insert(f);
            add_forms(p, PosTag::NNS, regular.empty() ? FormSet{plural_of(h)} : regular);
        }
    }
    if (e.verb) {
        p[PosTag::VB] = {h};
        p[PosTag::VBP] = override_or(e, PosTag::VBP, h);
        p[PosTag::VBZ] = override_or(e, PosTag::VBZ, third_person_of(h));
        p[PosTag::VBD] = override_or(e, PosTag::VBD, past_of(h, dbl));
        p[PosTag::VBG] = override_or(e, PosTag::VBG, gerund_of(h, dbl));
        // participle only when distinct from the past tense
        if (auto it = e.overrides.find(PosTag::VBN); it != e.overrides.end() && it->second != p[PosTag::VBD])
            p[PosTag::VBN] = it->second;
    }
    if (e.adjective) {
        p[PosTag::JJ] = {h};
        const bool short_adj = syllable_count(h) == 1 || (syllable_count(h) == 2 && h.back() == 'y');
        if (e.graded.value_or(short_adj)) {
            auto [er, est] = comparative_of(h, dbl);
            p[PosTag::JJR] = override_or(e, PosTag::JJR, er);
            p[PosTag::JJS] = override_or(e, PosTag::JJS, est);
        }
    }
    if (e.adverb) {
        p[PosTag::RB] = {h};
        if (e.graded.value_or(false) && !e.adjective) {
            auto [er, est] = comparative_of(h, dbl);
            p[PosTag::RBR] = override_or(e, PosTag::RBR, er);
            p[PosTag::RBS] = override_or(e, PosTag::RBS, est);
        } else if (e.overrides.count(PosTag::RBR) && e.overrides.count(PosTag::RBS)) {
            p[PosTag::RBR] = e.overrides.at(PosTag::RBR);
            p[PosTag::RBS] = e.overrides.at(PosTag::RBS);
        }
    }
    return p;
}

std::optional<LexiconEntry> Morphology::guess(std::string_view word) const
{
    for (const auto& rule : kSuffixRules) {
        if (word.size() > rule.suffix.size() + 1 && text::ends_with(word, rule.suffix)) {
            LexiconEntry e;
            e.headword = std::string(word);
            e.noun = rule.noun;
            e.verb = rule.verb;
            e.adjective = rule.adjective;
            e.adverb = rule.adverb;
            e.graded = false;
            return e;
        }
    }
    return std::nullopt;
}

TagResult Morphology::tag_pos(std::string_view headword) const
{
    const std::string w = text::to_lower(headword);
    if (const auto* e = lexicon_.find(w)) {
        TagResult r;
        for (const auto& [tag, forms] : paradigm_for(*e))
            r.tags.insert(tag);
        return r;
    }
    if (auto g = guess(w)) {
        TagResult r;
        r.low_confidence = true;
        for (const auto& [tag, forms] : paradigm_for(*g))
            r.tags.insert(tag);
        return r;
    }
    throw Error(Errc::UnknownWord, "'" + w + "' is not in the lexicon and no suffix rule applies");
}

std::map<PosTag, FormSet> Morphology::paradigm(std::string_view headword) const
{
    const std::string w = text::to_lower(headword);
    if (const auto* e = lexicon_.find(w))
        return paradigm_for(*e);
    if (auto g = guess(w))
        return paradigm_for(*g);
    throw Error(Errc::UnknownWord, "'" + w + "' is not in the lexicon and no suffix rule applies");
}

FormSet Morphology::inflect(std::string_view headword, PosTag tag) const
{
    const auto p = paradigm(headword);
    auto it = p.find(tag);
    if (it == p.end())
        throw Error(Errc::TagNotApplicable,
                    "tag " + std::string(to_string(tag)) + " does not apply to '" + std::string(headword) + "'");
    return it->second;
}

LemmaResult Morphology::lemma_of(std::string_view surface, PosTag tag) const
{
    const std::string w = text::to_lower(surface);
    if (auto it = lemma_index_.find({w, tag}); it != lemma_index_.end())
        return {it->second, true};
    return {std::string(surface), false};
}

WordGroup Morphology::build_word_group(const HeadwordEntry& entry, const SecondaryTagger& secondary) const
{
    const auto primary = tag_pos(entry.headword);
    const auto report = consensus_tags(entry.headword, primary.tags, secondary(entry.headword));
    const auto p = paradigm(entry.headword);
    WordGroup g{entry.headword, entry.sublist_id, {}};
    for (PosTag t : report.accepted)
        g.inflections.emplace(t, p.at(t));
    return g;
}

WordGroup Morphology::build_word_group(const HeadwordEntry& entry) const
{
    return WordGroup{entry.headword, entry.sublist_id, paradigm(entry.headword)};
}

ConsensusReport consensus_tags(const std::string& headword, const PosTagSet& primary, const PosTagSet& secondary)
{
    ConsensusReport r;
    r.headword = headword;
    std::set_intersection(primary.begin(), primary.end(), secondary.begin(), secondary.end(),
                          std::inserter(r.accepted, r.accepted.end()));
    std::set_difference(primary.begin(), primary.end(), secondary.begin(), secondary.end(),
                        std::inserter(r.rejected_primary_only, r.rejected_primary_only.end()));
    std::set_difference(secondary.begin(), secondary.end(), primary.begin(), primary.end(),
                        std::inserter(r.rejected_secondary_only, r.rejected_secondary_only.end()));
    if (r.accepted.empty())
        throw Error(Errc::EmptyConsensus, "taggers share no tag for '" + headword + "' (primary " +
                                              to_string(primary) + ", secondary " + to_string(secondary) + ")");
    return r;
}

// ---------------------------------------------------------------- fixture tagger

FixtureTagger FixtureTagger::parse(std::string_view text_in)
{
    FixtureTagger t;
    std::istringstream in{std::string(text_in)};
    std::string raw;
    while (std::getline(in, raw)) {
        const auto hash = raw.find('#');
        std::istringstream fields(hash == std::string::npos ? raw : raw.substr(0, hash));
        std::string word, tag;
        if (!(fields >> word))
            continue;
        PosTagSet tags;
        while (fields >> tag)
            tags.insert(parse_pos_tag_or_throw(tag));
        t.tags_[text::to_lower(word)] = std::move(tags);
    }
    return t;
}

FixtureTagger FixtureTagger::load(const std::string& path)
{
    return parse(text::read_file(path));
}

PosTagSet FixtureTagger::operator()(std::string_view headword) const
{
    auto it = tags_.find(headword);
    return it == tags_.end() ? PosTagSet{} : it->second;
}

}  // namespace cloze::morph
