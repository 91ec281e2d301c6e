#include "pedeval/error.hpp"

namespace pedeval {

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::io: return "io";
    case ErrorCategory::input: return "input";
    case ErrorCategory::empty_positive_set: return "empty-positive-set";
    case ErrorCategory::unreachable: return "unreachable";
    case ErrorCategory::conflict: return "conflict";
    case ErrorCategory::config: return "config";
  }
  return "unknown";
}

ParseError::ParseError(std::string path, std::size_t line, std::size_t column,
                       const std::string& reason)
    : Error(ErrorCategory::parse,
            path + ":" + std::to_string(line) + ":" + std::to_string(column) +
                ": " + reason),
      path_(std::move(path)),
      line_(line),
      column_(column) {}

}  // namespace pedeval
