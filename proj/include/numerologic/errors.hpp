#pragma once

#include <stdexcept>
#include <string>

namespace numerologic {

// Bad input, bad config, misuse of a scheme. CLI maps these to exit code 2.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Unsupported scheme/number combination.
struct SchemeError : ValidationError {
  explicit SchemeError(const std::string& what) : ValidationError(what) {}
};

// Failure while producing artifacts (I/O, exhaustion, overflow). Exit code 3.
struct ExecutionError : std::runtime_error {
  explicit ExecutionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace numerologic
