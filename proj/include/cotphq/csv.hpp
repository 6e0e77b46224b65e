#pragma once
// Minimal RFC 4180 reader/writer: quoted fields, doubled quotes, embedded
// newlines inside quotes. LF and CRLF line endings are both accepted.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cotphq::csv {

struct Row {
    std::size_t line = 0;  // 1-based line where the record starts
    std::vector<std::string> fields;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& reason)
        : std::runtime_error("line " + std::to_string(line) + ": " + reason), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Blank lines are skipped. Throws ParseError on an unterminated quote or
// stray characters after a closing quote.
std::vector<Row> parse(std::string_view text);

std::string quote_field(std::string_view field);
std::string format_row(const std::vector<std::string>& fields);

}  // namespace cotphq::csv
