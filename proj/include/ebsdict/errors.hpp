#pragma once

#include <stdexcept>
#include <string>

namespace ebsdict {

// Error categories map onto distinct CLI exit codes (see tools/ebsdict.cpp).

/// Bad configuration values or flags.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read/written or has an invalid layout.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure hit a degenerate input (zero norm, collapsed data, ...).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ebsdict
