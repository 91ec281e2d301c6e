#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pedeval {

enum class ErrorCategory {
  parse,
  io,
  input,
  empty_positive_set,
  unreachable,
  conflict,
  config,
};

std::string_view to_string(ErrorCategory category);

// Base of every error thrown by the toolkit. The category is stable and
// machine-parsable; what() carries the human detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& detail)
      : std::runtime_error(detail), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ParseError : public Error {
 public:
  ParseError(std::string path, std::size_t line, std::size_t column,
             const std::string& reason);

  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::string path_;
  std::size_t line_;
  std::size_t column_;
};

// Collects non-fatal data-quality warnings. Functions accept a nullable
// pointer; passing nullptr discards warnings.
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
};

inline void warn(Diagnostics* diag, std::string message) {
  if (diag != nullptr) diag->warn(std::move(message));
}

}  // namespace pedeval
