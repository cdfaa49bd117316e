#pragma once

#include <string>
#include <string_view>
#include <vector>

// Minimal RFC 4180 reader/writer. Fields containing a comma, quote, CR or LF
// are quoted on output; quoted fields may span lines on input.
namespace cloze::csv {

using Row = std::vector<std::string>;

/// Throws Error(MalformedCsv) on an unterminated quoted field or stray quote.
std::vector<Row> parse(std::string_view text);

std::string format_field(std::string_view field);

/// One row, LF-terminated.
std::string format_row(const Row& row);

}  // namespace cloze::csv
