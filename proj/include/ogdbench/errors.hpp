#pragma once

#include <stdexcept>
#include <string>

namespace ogdbench {

// Bad argument values (dimension mismatches, NaN inputs, unknown enum names).
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Object state inconsistent with the requested operation.
struct InvalidState : std::logic_error {
  using std::logic_error::logic_error;
};

// Malformed input file; message names the offending file.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path(path) {}
  std::string path;
};

// Structurally invalid experiment specification (overlapping split
// partitions, suite/model mismatch, unknown config key).
struct InvalidSpec : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ogdbench
