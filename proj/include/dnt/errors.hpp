#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dnt {

/// Invalid user-supplied configuration or arguments. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number and, when known, the field.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string source, std::size_t line, std::string field, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + (field.empty() ? "" : " [" + field + "]") +
                             ": " + what),
          source_(std::move(source)),
          line_(line),
          field_(std::move(field)) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::string source_;
    std::size_t line_;
    std::string field_;
};

}  // namespace dnt
