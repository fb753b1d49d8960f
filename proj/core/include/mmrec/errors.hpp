#pragma once

#include <stdexcept>
#include <string>

namespace mmrec {

// Error categories map onto CLI exit codes: configuration/parse -> 2,
// numerical abort -> 3, I/O -> 4.
enum class ErrorKind {
  argument,
  dimension,
  parse,
  config,
  io,
  numeric,
  consistency,
  lookup,
  catalog,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  int exit_code() const {
    switch (kind_) {
      case ErrorKind::numeric:
        return 3;
      case ErrorKind::io:
        return 4;
      default:
        return 2;
    }
  }

 private:
  ErrorKind kind_;
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& m) : Error(ErrorKind::argument, m) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& m) : Error(ErrorKind::dimension, m) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& m) : Error(ErrorKind::parse, m) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error(ErrorKind::config, m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorKind::io, m) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& m) : Error(ErrorKind::numeric, m) {}
};

class ConsistencyError : public Error {
 public:
  explicit ConsistencyError(const std::string& m) : Error(ErrorKind::consistency, m) {}
};

class LookupError : public Error {
 public:
  explicit LookupError(const std::string& m) : Error(ErrorKind::lookup, m) {}
};

class CatalogError : public Error {
 public:
  explicit CatalogError(const std::string& m) : Error(ErrorKind::catalog, m) {}
};

}  // namespace mmrec
