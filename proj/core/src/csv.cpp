#include "sfclust/csv.hpp"

#include <exception>
#include <istream>
#include <sstream>
#include <string>

#include "sfclust/errors.hpp"

namespace sfclust::csv {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

}  // namespace

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

std::vector<Row> read_table(std::istream& in, const std::string& name) {
    if (!in) throw ParseError(name + ": cannot read input");
    std::vector<Row> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        rows.push_back(Row{split_line(line), line_no});
    }
    return rows;
}

void require_header(const Row& header, const std::vector<std::string>& expected,
                    const std::string& name) {
    if (header.fields == expected) return;
    std::ostringstream want;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i) want << ",";
        want << expected[i];
    }
    throw ParseError(name + ": line " + std::to_string(header.line_no) +
                     ": expected header '" + want.str() + "'");
}

double parse_double(const std::string& field, const std::string& name, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used == field.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError(name + ": line " + std::to_string(line_no) + ": not a number: '" + field +
                     "'");
}

long long parse_long(const std::string& field, const std::string& name, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(field, &used);
        if (used == field.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError(name + ": line " + std::to_string(line_no) + ": not an integer: '" + field +
                     "'");
}

}  // namespace sfclust::csv
