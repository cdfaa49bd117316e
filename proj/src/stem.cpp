#include "clozegen/stem.hpp"

#include <algorithm>

#include "clozegen/error.hpp"
#include "clozegen/prompts.hpp"
#include "clozegen/text.hpp"

namespace cloze::stem {

void StemConstraints::validate() const
{
    if (max_words < 5)
        throw Error(Errc::ConfigError, "stem max_words must be at least 5");
    if (max_key_occurrences != 1)
        throw Error(Errc::ConfigError, "a key may occur only once per stem");
    if (domain_label.empty())
        throw Error(Errc::ConfigError, "stem domain label is empty");
}

std::string_view to_string(Violation v)
{
    switch (v) {
    case Violation::KeyMissing: return "KEY_MISSING";
    case Violation::KeyAtStart: return "KEY_AT_START";
    case Violation::KeyAltered: return "KEY_ALTERED";
    case Violation::KeyDuplicated: return "KEY_DUPLICATED";
    case Violation::TooLong: return "TOO_LONG";
    case Violation::PosMismatch: return "POS_MISMATCH";
    case Violation::NoBackticks: return "NO_BACKTICKS";
    }
    return "UNKNOWN";
}

bool StemValidationReport::has(Violation v) const
{
    return std::any_of(violations.begin(), violations.end(), [v](const auto& e) { return e.code == v; });
}

std::string StemValidationReport::summary() const
{
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty())
            out += ';';
        out += to_string(v.code);
    }
    return out;
}

TaggedKey pick_key(const WordGroup& group, Rng& rng)
{
    auto tag_it = group.inflections.begin();
    std::advance(tag_it, static_cast<std::ptrdiff_t>(rng.below(group.inflections.size())));
    const auto& forms = tag_it->second;
    auto form_it = forms.begin();
    std::advance(form_it, static_cast<std::ptrdiff_t>(rng.below(forms.size())));
    return {*form_it, tag_it->first, group.headword};
}

std::string build_stem_prompt(const TaggedKey& key, const StemConstraints& constraints)
{
    return text::substitute(prompts::stem_template(),
                            {{"word", key.surface},
                             {"max_words", std::to_string(constraints.max_words)},
                             {"domain", constraints.domain_label},
                             {"pos_tag", std::string(to_string(key.tag))},
                             {"position_rule", constraints.forbid_initial_position
                                                   ? "It should not be at the beginning of the sentence. "
                                                   : ""}});
}

namespace {

// Drops a surrounding ``` fence (with optional language tag) if present.
std::string strip_fence(std::string s)
{
    s = text::trim(s);
    if (!text::starts_with(s, "```"))
        return s;
    const auto first_nl = s.find('\n');
    const auto closing = s.rfind("```");
    if (first_nl == std::string::npos || closing <= first_nl)
        return s;
    return text::trim(s.substr(first_nl + 1, closing - first_nl - 1));
}

}  // namespace

GeneratedSentence parse_sentence(std::string_view raw)
{
    const std::string s = strip_fence(std::string(raw));
    std::vector<std::size_t> ticks;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] == '`')
            ticks.push_back(i);
    if (ticks.size() < 2)
        throw Error(Errc::NoBackticks, "no backtick-delimited key in: " + s);
    if (ticks.size() > 2)
        throw Error(Errc::MultipleKeys, std::to_string(ticks.size()) + " backticks in: " + s);

    GeneratedSentence out;
    std::string inner = s.substr(ticks[0] + 1, ticks[1] - ticks[0] - 1);
    // keep spaces inside the marks out of the key
    std::size_t lead = 0;
    while (lead < inner.size() && inner[lead] == ' ')
        ++lead;
    std::size_t trail = inner.size();
    while (trail > lead && inner[trail - 1] == ' ')
        --trail;

    out.full_text = s.substr(0, ticks[0]) + inner + s.substr(ticks[1] + 1);
    out.key_begin = ticks[0] + lead;
    out.key_end = ticks[0] + trail;
    out.key_surface = inner.substr(lead, trail - lead);
    return out;
}

int word_count(std::string_view sentence)
{
    return static_cast<int>(text::whitespace_tokens(sentence).size());
}

StemValidationReport validate_stem(const GeneratedSentence& sentence, const TaggedKey& requested,
                                   const StemConstraints& constraints, const WordGroup* group)
{
    StemValidationReport report;
    auto add = [&](Violation v, std::string msg) { report.violations.push_back({v, std::move(msg)}); };

    if (sentence.key_surface.empty()) {
        add(Violation::KeyMissing, "backticks enclose no word");
    } else if (!text::iequals(sentence.key_surface, requested.surface)) {
        add(Violation::KeyAltered, "model returned '" + sentence.key_surface + "' instead of '" +
                                       requested.surface + "'");
        if (group) {
            const std::string returned = text::to_lower(sentence.key_surface);
            const auto own = group->inflections.find(requested.tag);
            const bool in_requested = own != group->inflections.end() && own->second.count(returned);
            for (const auto& [tag, forms] : group->inflections) {
                if (tag != requested.tag && forms.count(returned) && !in_requested) {
                    add(Violation::PosMismatch, "'" + sentence.key_surface + "' is the " +
                                                    std::string(to_string(tag)) + " form, not " +
                                                    std::string(to_string(requested.tag)));
                    break;
                }
            }
        }
    }
    if (sentence.full_text.find(kBlank) != std::string::npos)
        add(Violation::KeyMissing, "sentence already contains a blank marker");

    if (constraints.forbid_initial_position && !sentence.key_surface.empty()) {
        const auto tokens = text::whitespace_tokens(sentence.full_text);
        if (!tokens.empty() && sentence.key_begin < tokens.front().end)
            add(Violation::KeyAtStart, "key is the first word of the sentence");
    }

    std::vector<std::string> probes = {requested.surface};
    if (!sentence.key_surface.empty() && !text::iequals(sentence.key_surface, requested.surface))
        probes.push_back(sentence.key_surface);
    for (const auto& probe : probes) {
        int others = 0;
        for (std::size_t pos : text::find_word(sentence.full_text, probe))
            if (pos != sentence.key_begin)
                ++others;
        if (others > constraints.max_key_occurrences - 1) {
            add(Violation::KeyDuplicated, "'" + probe + "' occurs again outside the key position");
            break;
        }
    }

    const int words = word_count(sentence.full_text);
    if (words > constraints.max_words)
        add(Violation::TooLong, std::to_string(words) + " words exceeds the limit of " +
                                    std::to_string(constraints.max_words));
    return report;
}

StemValidationReport check_response(std::string_view raw, const TaggedKey& requested,
                                    const StemConstraints& constraints, const WordGroup* group)
{
    try {
        return validate_stem(parse_sentence(raw), requested, constraints, group);
    } catch (const Error& e) {
        StemValidationReport report;
        if (e.code() == Errc::NoBackticks) {
            const bool present = !text::find_word(raw, requested.surface).empty();
            report.violations.push_back({Violation::NoBackticks, "response has no backtick-delimited key"});
            report.violations.push_back(
                {Violation::KeyMissing, present ? "key is present but unmarked, so no blank can be made"
                                                : "key does not occur in the response"});
            return report;
        }
        if (e.code() == Errc::MultipleKeys) {
            report.violations.push_back({Violation::KeyDuplicated, e.what()});
            return report;
        }
        throw;
    }
}

QuestionStem blank_out(const GeneratedSentence& sentence, const TaggedKey& requested)
{
    QuestionStem out;
    out.text_with_blank = sentence.full_text.substr(0, sentence.key_begin) + std::string(kBlank) +
                          sentence.full_text.substr(sentence.key_end);
    out.key = {sentence.key_surface, requested.tag, requested.headword};
    out.word_count = word_count(out.text_with_blank);
    return out;
}

std::string fill_blank(std::string_view text_with_blank, std::string_view word)
{
    const auto pos = text_with_blank.find(kBlank);
    if (pos == std::string_view::npos)
        throw Error(Errc::InvalidArgument, "stem has no blank");
    std::string out(text_with_blank.substr(0, pos));
    out += word;
    out += text_with_blank.substr(pos + kBlank.size());
    return out;
}

std::string build_pos_check_prompt(const GeneratedSentence& sentence, PosTag tag)
{
    const std::string marked = sentence.full_text.substr(0, sentence.key_begin) + "`" + sentence.key_surface +
                               "`" + sentence.full_text.substr(sentence.key_end);
    return text::substitute(prompts::pos_check_template(),
                            {{"pos_tag", std::string(to_string(tag))}, {"sentence", marked}});
}

}  // namespace cloze::stem
