#pragma once

#include <stdexcept>
#include <string>

namespace pdm {

// Process exit codes used by the CLI.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kData = 3,
  kInternal = 4,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::kInternal; }
};

// Bad argument or configuration value.
class ArgumentError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kUsage; }
};

class ConfigError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kData; }
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

class CalibrationError : public DataError {
 public:
  using DataError::DataError;
};

class NotReadyError : public Error {
 public:
  using Error::Error;
};

class UnsupportedModelError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class TemplateError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// Broken internal invariant (path mismatch, corrupt checkpoint, ...).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

// Wraps an error raised inside a named pipeline stage, keeping its exit code.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const Error& cause)
      : Error(stage + ": " + cause.what()), code_(cause.exit_code()) {}
  ExitCode exit_code() const noexcept override { return code_; }

 private:
  ExitCode code_;
};

}  // namespace pdm
