#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Small ASCII-oriented string helpers shared across modules.
namespace cloze::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

struct Token {
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Tokens separated by whitespace (space, tab, CR, LF, VT, FF, and the UTF-8
/// no-break/ideographic spaces). Punctuation stays attached.
std::vector<Token> whitespace_tokens(std::string_view s);

/// Case-insensitive whole-word occurrences of `word` in `s`. A word
/// boundary is any position not adjacent to an ASCII letter, digit, hyphen
/// or apostrophe-inside-a-word.
std::vector<std::size_t> find_word(std::string_view s, std::string_view word);

std::vector<std::string> split(std::string_view s, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Replaces every "{{name}}" with the value from the list; unknown
/// placeholders are left untouched.
std::string substitute(std::string_view tmpl,
                       const std::vector<std::pair<std::string, std::string>>& values);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace cloze::text
