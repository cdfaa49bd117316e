#include "clozegen/wordlist.hpp"

#include <cctype>
#include <charconv>
#include <set>

#include "clozegen/csv.hpp"
#include "clozegen/error.hpp"
#include "clozegen/text.hpp"

namespace cloze {

PosTagSet WordGroup::tags() const
{
    PosTagSet out;
    for (const auto& [tag, forms] : inflections)
        out.insert(tag);
    return out;
}

const WordGroup* WordGroupSet::find(const std::string& headword) const
{
    for (const auto& g : groups)
        if (g.headword == headword)
            return &g;
    return nullptr;
}

}  // namespace cloze

namespace cloze::wordlist {

namespace {

std::string strip_bom(std::string_view text)
{
    if (text.substr(0, 3) == "\xEF\xBB\xBF")
        text.remove_prefix(3);
    return std::string(text);
}

int parse_sublist(const std::string& field, std::size_t row)
{
    int value = 0;
    const std::string t = text::trim(field);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size() || value < 1)
        throw Error(Errc::MalformedCsv,
                    "row " + std::to_string(row) + ": sublist must be a positive integer, got '" + field + "'");
    return value;
}

std::string checked_headword(const std::string& field, std::size_t row)
{
    std::string word = text::to_lower(text::trim(field));
    if (word.empty())
        throw Error(Errc::MalformedCsv, "row " + std::to_string(row) + ": blank headword");
    if (!is_valid_headword(word))
        throw Error(Errc::MalformedCsv, "row " + std::to_string(row) + ": invalid headword '" + field + "'");
    return word;
}

bool blank_row(const csv::Row& r)
{
    return r.size() == 1 && text::trim(r[0]).empty();
}

}  // namespace

bool is_valid_headword(std::string_view word)
{
    if (word.empty())
        return false;
    auto letter = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; };
    if (!letter(word.front()) || !letter(word.back()))
        return false;
    for (char c : word)
        if (!letter(c) && c != '-' && c != '\'')
            return false;
    return true;
}

std::vector<HeadwordEntry> parse_headword_list(std::string_view raw_csv)
{
    const auto rows = csv::parse(strip_bom(raw_csv));
    if (rows.empty() || rows.front().size() != 2 || text::trim(rows.front()[0]) != "headword" ||
        text::trim(rows.front()[1]) != "sublist")
        throw Error(Errc::MalformedCsv, "expected header 'headword,sublist'");

    std::vector<HeadwordEntry> out;
    std::set<std::string> seen;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (blank_row(r) && i + 1 == rows.size())
            continue;
        if (r.size() != 2)
            throw Error(Errc::MalformedCsv, "row " + std::to_string(i + 1) + ": expected 2 columns, got " +
                                                std::to_string(r.size()));
        out.push_back({checked_headword(r[0], i + 1), parse_sublist(r[1], i + 1)});
        if (!seen.insert(out.back().headword).second)
            throw Error(Errc::DuplicateHeadword, "row " + std::to_string(i + 1) + ": '" + out.back().headword +
                                                     "' is listed twice");
    }
    if (out.empty())
        throw Error(Errc::EmptyList, "headword list has no data rows");
    return out;
}

std::vector<HeadwordEntry> read_headword_list(const std::string& path)
{
    return parse_headword_list(text::read_file(path));
}

std::string format_word_groups(const WordGroupSet& set)
{
    if (set.empty())
        throw Error(Errc::EmptyList, "refusing to write an empty word-group set");
    std::string out(kWordGroupHeader);
    out += '\n';
    for (const auto& g : set.groups) {
        for (const auto& [tag, forms] : g.inflections) {
            std::vector<std::string> fs(forms.begin(), forms.end());
            out += csv::format_row({g.headword, std::to_string(g.sublist_id), std::string(to_string(tag)),
                                    text::join(fs, "|")});
        }
    }
    return out;
}

WordGroupSet parse_word_groups(std::string_view text_in, std::string source_label)
{
    const auto rows = csv::parse(strip_bom(text_in));
    if (rows.empty() || rows.front().size() != 4 || text::trim(rows.front()[0]) != "headword" ||
        text::trim(rows.front()[1]) != "sublist" || text::trim(rows.front()[2]) != "pos_tag" ||
        text::trim(rows.front()[3]) != "forms")
        throw Error(Errc::MalformedCsv, "expected header '" + std::string(kWordGroupHeader) + "'");

    WordGroupSet set;
    set.source_label = std::move(source_label);
    std::set<std::string> closed;  // headwords whose rows are finished

    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const std::size_t line = i + 1;
        if (blank_row(r) && i + 1 == rows.size())
            continue;
        if (r.size() != 4)
            throw Error(Errc::MalformedCsv,
                        "row " + std::to_string(line) + ": expected 4 columns, got " + std::to_string(r.size()));
        std::string headword = checked_headword(r[0], line);
        const int sublist = parse_sublist(r[1], line);
        const PosTag tag = parse_pos_tag_or_throw(text::trim(r[2]));

        FormSet forms;
        for (const auto& f : text::split(r[3], '|')) {
            std::string form = text::trim(f);
            if (form.empty() || form.find_first_of(", \t") != std::string::npos)
                throw Error(Errc::MalformedCsv, "row " + std::to_string(line) + ": bad form list '" + r[3] + "'");
            forms.insert(std::move(form));
        }

        const bool continues = !set.groups.empty() && set.groups.back().headword == headword;
        if (!continues) {
            if (closed.count(headword) || set.find(headword))
                throw Error(Errc::DuplicateHeadword, "headword '" + headword + "' appears in separate blocks");
            if (!set.groups.empty())
                closed.insert(set.groups.back().headword);
            set.groups.push_back({headword, sublist, {}});
        }
        WordGroup& g = set.groups.back();
        if (g.sublist_id != sublist)
            throw Error(Errc::MalformedCsv, "row " + std::to_string(line) + ": conflicting sublist for '" +
                                                headword + "'");
        if (!g.inflections.emplace(tag, std::move(forms)).second)
            throw Error(Errc::DuplicateHeadword,
                        "headword '" + headword + "' lists tag " + std::string(to_string(tag)) + " twice");
    }
    if (set.empty())
        throw Error(Errc::EmptyList, "word-group file has no data rows");
    return set;
}

void write_word_groups(const WordGroupSet& set, const std::string& path)
{
    text::write_file(path, format_word_groups(set));
}

WordGroupSet load_word_groups(const std::string& path)
{
    return parse_word_groups(text::read_file(path), path);
}

bool looks_like_headword_list(std::string_view text_in)
{
    const std::string t = strip_bom(text_in);
    const std::string first = text::trim(t.substr(0, t.find('\n')));
    return first == kHeadwordHeader;
}

}  // namespace cloze::wordlist
