#pragma once

#include <stdexcept>
#include <string>

namespace pairdiff {

/// Base class for every error raised by the library. The CLI maps each
/// subclass to its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, flags, or preconditions on arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Files that cannot be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed or invalid input data (CSV parse failures, non-binary outcomes).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Solver or linear-algebra failure: singular systems, nonconvergence,
/// degenerate pair sets.
class NumericalError : public Error {
 public:
  using Error::Error;
};

namespace exit_code {
inline constexpr int kSuccess = 0;
inline constexpr int kUnknown = 1;
inline constexpr int kConfig = 2;
inline constexpr int kIo = 3;
inline constexpr int kData = 4;
inline constexpr int kNumerical = 5;
inline constexpr int kVerdictFail = 6;
inline constexpr int kVerdictInconclusive = 7;
}  // namespace exit_code

}  // namespace pairdiff
