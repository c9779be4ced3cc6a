#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace sfclust::csv {

struct Row {
    std::vector<std::string> fields;
    std::size_t line_no = 0;
};

/// Splits one CSV line on commas. Fields are trimmed of surrounding
/// whitespace; quoting is not supported (no field in our formats needs it).
std::vector<std::string> split_line(const std::string& line);

/// Reads a whole CSV table. Blank lines and lines starting with '#' are
/// skipped. `name` is used in error messages.
std::vector<Row> read_table(std::istream& in, const std::string& name);

/// Checks that `header` matches `expected` exactly (case-sensitive).
/// Throws ParseError naming the file otherwise.
void require_header(const Row& header, const std::vector<std::string>& expected,
                    const std::string& name);

/// Parses one numeric field, consuming the whole string.
/// Throws ParseError naming the file and line otherwise.
double parse_double(const std::string& field, const std::string& name, std::size_t line_no);
long long parse_long(const std::string& field, const std::string& name, std::size_t line_no);

}  // namespace sfclust::csv
