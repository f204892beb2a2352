#pragma once

#include <stdexcept>
#include <string>

namespace zsar {

// Process exit codes used by the CLI. Library errors carry the code they
// map to so the tools layer can translate without string matching.
enum class ExitCode : int {
  ok = 0,
  config = 2,
  data = 3,
  numeric = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ExitCode code() const noexcept { return code_; }
  int exit_code() const noexcept { return static_cast<int>(code_); }

 private:
  ExitCode code_;
};

// Invalid configuration, bad interface usage, or inconsistent settings.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ExitCode::config, message) {}
};

// Tensor or matrix dimensions that do not line up.
class ShapeError : public ConfigError {
 public:
  explicit ShapeError(const std::string& message) : ConfigError(message) {}
};

// Malformed, degenerate, or missing data.
class DataError : public Error {
 public:
  explicit DataError(const std::string& message)
      : Error(ExitCode::data, message) {}
};

// File-format parse failures; messages name the offending line.
class ParseError : public DataError {
 public:
  explicit ParseError(const std::string& message) : DataError(message) {}
};

// Filesystem read/write failures.
class IoError : public DataError {
 public:
  explicit IoError(const std::string& message) : DataError(message) {}
};

// Zero-shot hygiene violation: an unseen-class sample reached a training
// stage. Always a hard failure.
class ContaminationError : public DataError {
 public:
  explicit ContaminationError(const std::string& message)
      : DataError(message) {}
};

// Non-finite values (NaN/Inf) where finite ones are required.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& message)
      : Error(ExitCode::numeric, message) {}
};

}  // namespace zsar
