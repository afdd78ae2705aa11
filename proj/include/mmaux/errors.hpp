#pragma once

#include <stdexcept>
#include <string>

namespace mmaux {

// Invalid configuration (bad field values, missing files, unknown keys).
// CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad runtime input: shape mismatches, out-of-range ids, label out of range.
struct InputError : std::runtime_error {
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed persisted data. Carries the 1-based line number when known.
struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, long line_no)
      : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"),
        line(line_no) {}
  long line;
};

// Degenerate numeric situations: zero rows fed to a normalizer, batches too
// small for a contrastive term, zero-variance significance tests.
struct DegenerateError : std::runtime_error {
  explicit DegenerateError(const std::string& msg) : std::runtime_error(msg) {}
};

// A verification check could not be evaluated (e.g. non-finite loss).
struct CheckError : std::runtime_error {
  explicit CheckError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mmaux
