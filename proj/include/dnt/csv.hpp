#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dnt::csv {

/// One parsed data row with its 1-based line number in the source file.
struct Row {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

/// Reads a simple comma-separated file (no quoting). The first non-empty line
/// must equal `expected_header` after whitespace trimming; blank lines are skipped.
std::vector<Row> read(const std::filesystem::path& path, std::string_view expected_header);

/// Splits on ',' and trims surrounding whitespace of each field.
std::vector<std::string> split(std::string_view line);

std::string trim(std::string_view s);

/// Fixed-point rendering used for every time value the tools write.
std::string format_seconds(double v);
std::string format_optional_seconds(const std::optional<double>& v);
/// Shortest round-trippable rendering for generic reals.
std::string format_real(double v);

double parse_double(const Row& row, std::size_t col, const std::string& source, const std::string& field);
long long parse_int(const Row& row, std::size_t col, const std::string& source, const std::string& field);
std::optional<double> parse_optional_double(const Row& row, std::size_t col, const std::string& source,
                                            const std::string& field);

/// Writes `content` to `path`, throwing std::runtime_error naming the path on failure.
void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace dnt::csv
