#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aqd {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Errors caused by bad inputs (files, configuration, data). The CLI maps
/// these to exit code 2; anything else derived from Error maps to 3.
class InputError : public Error {
 public:
  using Error::Error;
};

class IoError : public InputError {
 public:
  IoError(const std::string& path, const std::string& what);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Malformed file content. `line` is 1-based; 0 when not applicable.
class FormatError : public InputError {
 public:
  FormatError(const std::string& what, std::size_t line = 0);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class DataError : public InputError {
 public:
  using InputError::InputError;
};

class SchemaError : public InputError {
 public:
  using InputError::InputError;
};

class JoinError : public InputError {
 public:
  using InputError::InputError;
};

class CoverageError : public InputError {
 public:
  using InputError::InputError;
};

class DomainError : public InputError {
 public:
  using InputError::InputError;
};

class OutOfBoundsError : public InputError {
 public:
  using InputError::InputError;
};

/// D8 routing could not resolve a cell (e.g. a closed flat on an unfilled DEM).
class TopologyError : public Error {
 public:
  TopologyError(const std::string& what, std::size_t row, std::size_t col);
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

}  // namespace aqd
