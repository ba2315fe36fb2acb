#pragma once

#include <stdexcept>
#include <string>

namespace foresight {

// Bad input: config, trace line, action outside its space. CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Query against a sketch or graph that has not seen any data yet.
class ColdStartError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed trace line or snapshot document.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, std::string field, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " +
                        (field.empty() ? std::string() : "field '" + field + "': ") + what),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

void require_finite(double v, const char* what);

}  // namespace foresight
