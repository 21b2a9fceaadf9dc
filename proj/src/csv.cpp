#include "dnt/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dnt/errors.hpp"

namespace dnt::csv {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

std::vector<Row> read(const std::filesystem::path& path, std::string_view expected_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<Row> rows;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    const auto header_fields = split(expected_header);
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split(line);
        if (!have_header) {
            if (fields != header_fields) {
                throw ParseError(path.string(), lineno, "", "expected header '" + std::string(expected_header) + "'");
            }
            have_header = true;
            continue;
        }
        if (fields.size() != header_fields.size()) {
            throw ParseError(path.string(), lineno, "",
                             "expected " + std::to_string(header_fields.size()) + " fields, got " +
                                 std::to_string(fields.size()));
        }
        rows.push_back(Row{lineno, std::move(fields)});
    }
    if (!have_header) throw ParseError(path.string(), 1, "", "missing header");
    return rows;
}

std::string format_seconds(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", v);
    return buf;
}

std::string format_optional_seconds(const std::optional<double>& v) {
    return v ? format_seconds(*v) : std::string{};
}

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const Row& row, std::size_t col, const std::string& source, const std::string& field) {
    const std::string& s = row.fields.at(col);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ParseError(source, row.line, field, "not a finite number: '" + s + "'");
    }
    return v;
}

long long parse_int(const Row& row, std::size_t col, const std::string& source, const std::string& field) {
    const std::string& s = row.fields.at(col);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ParseError(source, row.line, field, "not an integer: '" + s + "'");
    }
    return v;
}

std::optional<double> parse_optional_double(const Row& row, std::size_t col, const std::string& source,
                                            const std::string& field) {
    if (row.fields.at(col).empty()) return std::nullopt;
    return parse_double(row, col, source, field);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace dnt::csv
