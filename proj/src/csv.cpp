#include "clozegen/csv.hpp"

#include "clozegen/error.hpp"

namespace cloze::csv {

std::vector<Row> parse(std::string_view text)
{
    std::vector<Row> rows;
    Row row;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool row_has_content = false;
    std::size_t line = 1;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        row_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n')
                    ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field.empty() || field_was_quoted)
                throw Error(Errc::MalformedCsv, "stray quote on line " + std::to_string(line));
            in_quotes = true;
            field_was_quoted = true;
            row_has_content = true;
            break;
        case ',':
            end_field();
            row_has_content = true;
            break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n')
                break;
            field += c;
            break;
        case '\n':
            end_row();
            ++line;
            break;
        default:
            if (field_was_quoted)
                throw Error(Errc::MalformedCsv, "text after closing quote on line " + std::to_string(line));
            field += c;
            row_has_content = true;
        }
    }
    if (in_quotes)
        throw Error(Errc::MalformedCsv, "unterminated quoted field");
    if (row_has_content || !field.empty())
        end_row();
    return rows;
}

std::string format_field(std::string_view field)
{
    if (field.find_first_of(",\"\r\n") == std::string_view::npos)
        return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_row(const Row& row)
{
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i)
            out += ',';
        out += format_field(row[i]);
    }
    out += '\n';
    return out;
}

}  // namespace cloze::csv
