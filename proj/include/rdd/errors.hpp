#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rdd {

/// Base class for every error raised by the toolkit. The category string is
/// what the CLI prints in front of the message.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

/// Malformed input text. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line = 0)
      : Error("parse error", line == 0 ? message
                                       : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that lacks a required element.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& message) : Error("schema error", message) {}
};

/// A value violates a type invariant (inverted box, score outside [0,1], ...).
class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& message) : Error("invariant error", message) {}
};

/// An id was referenced that does not exist.
class LookupError : public Error {
 public:
  explicit LookupError(const std::string& message) : Error("lookup error", message) {}
};

/// A caller broke a documented precondition.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& message) : Error("contract error", message) {}
};

class EmptyDatasetError : public Error {
 public:
  explicit EmptyDatasetError(const std::string& message) : Error("empty dataset", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("i/o error", message) {}
};

/// A class has no token under the selected submission label encoding.
class EncodingError : public Error {
 public:
  explicit EncodingError(const std::string& message) : Error("encoding error", message) {}
};

/// Perturbation parameters fall outside the regime where exact counts are known.
class UnsafeParamsError : public Error {
 public:
  explicit UnsafeParamsError(const std::string& message) : Error("unsafe parameters", message) {}
};

}  // namespace rdd
