#include "clozegen/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "clozegen/error.hpp"

namespace cloze::text {

namespace {

unsigned char uc(char c) { return static_cast<unsigned char>(c); }

bool is_word_char(char c)
{
    return std::isalnum(uc(c)) || c == '-' || uc(c) >= 0x80;
}

// Length of the whitespace sequence starting at s[i], 0 if none.
std::size_t space_len(std::string_view s, std::size_t i)
{
    const unsigned char c = uc(s[i]);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f')
        return 1;
    auto at = [&](std::size_t k) { return i + k < s.size() ? uc(s[i + k]) : 0u; };
    if (c == 0xC2 && at(1) == 0xA0)  // U+00A0
        return 2;
    if (c == 0xE1 && at(1) == 0x9A && at(2) == 0x80)  // U+1680
        return 3;
    if (c == 0xE2 && at(1) == 0x80 && ((at(2) >= 0x80 && at(2) <= 0x8A) || at(2) == 0xA8 ||
                                       at(2) == 0xA9 || at(2) == 0xAF))
        return 3;  // U+2000..200A, U+2028, U+2029, U+202F
    if (c == 0xE2 && at(1) == 0x81 && at(2) == 0x9F)  // U+205F
        return 3;
    if (c == 0xE3 && at(1) == 0x80 && at(2) == 0x80)  // U+3000
        return 3;
    return 0;
}

}  // namespace

std::string to_lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](char c) { return static_cast<char>(std::tolower(uc(c))); });
    return out;
}

std::string trim(std::string_view s)
{
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(uc(s[b])))
        ++b;
    while (e > b && std::isspace(uc(s[e - 1])))
        --e;
    return std::string(s.substr(b, e - b));
}

bool iequals(std::string_view a, std::string_view b)
{
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(uc(x)) == std::tolower(uc(y));
           });
}

bool starts_with(std::string_view s, std::string_view prefix)
{
    return s.substr(0, prefix.size()) == prefix;
}

bool ends_with(std::string_view s, std::string_view suffix)
{
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::vector<Token> whitespace_tokens(std::string_view s)
{
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t n;
        while (i < s.size() && (n = space_len(s, i)) > 0)
            i += n;
        if (i >= s.size())
            break;
        const std::size_t begin = i;
        while (i < s.size() && space_len(s, i) == 0)
            ++i;
        out.push_back({begin, i});
    }
    return out;
}

std::vector<std::size_t> find_word(std::string_view s, std::string_view word)
{
    std::vector<std::size_t> hits;
    if (word.empty() || word.size() > s.size())
        return hits;
    for (std::size_t i = 0; i + word.size() <= s.size(); ++i) {
        if (!iequals(s.substr(i, word.size()), word))
            continue;
        const bool left_ok = i == 0 || !is_word_char(s[i - 1]);
        const std::size_t j = i + word.size();
        const bool right_ok = j == s.size() || !is_word_char(s[j]);
        if (left_ok && right_ok)
            hits.push_back(i);
    }
    return hits;
}

std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i)
            out += sep;
        out += parts[i];
    }
    return out;
}

std::string substitute(std::string_view tmpl,
                       const std::vector<std::pair<std::string, std::string>>& values)
{
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl.compare(i, 2, "{{") == 0) {
            const std::size_t close = tmpl.find("}}", i + 2);
            if (close != std::string_view::npos) {
                const std::string_view name = tmpl.substr(i + 2, close - i - 2);
                auto it = std::find_if(values.begin(), values.end(),
                                       [&](const auto& kv) { return kv.first == name; });
                if (it != values.end()) {
                    out += it->second;
                    i = close + 2;
                    continue;
                }
            }
        }
        out += tmpl[i++];
    }
    return out;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::IoError, "cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(Errc::IoError, "cannot open '" + path + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
        throw Error(Errc::IoError, "write to '" + path + "' failed");
}

}  // namespace cloze::text
