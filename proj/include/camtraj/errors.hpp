#pragma once

#include <stdexcept>
#include <string>

namespace camtraj {

// Base class for all library errors.
class error : public std::runtime_error {
public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or unreadable input data. Carries a 1-based line number when the
// failure can be attributed to a specific line of a text file.
class parse_error : public error {
public:
  explicit parse_error(const std::string& what, int line = 0)
      : error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

// Invalid configuration values or incompatible options.
class config_error : public error {
public:
  using error::error;
};

// Geometric preconditions violated (length mismatches, short trajectories,
// non-rotation matrices, insufficient point sets, ...).
class geometry_error : public error {
public:
  using error::error;
};

}  // namespace camtraj
