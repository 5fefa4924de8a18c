#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace barrierkit {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad caller input: dimension mismatch, invalid option values, unknown names.
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// A computation produced NaN/Inf or hit a numerical dead end.
class NumericError : public Error {
public:
  using Error::Error;
};

/// A documented precondition was violated (e.g. point not on the boundary).
class ContractError : public Error {
public:
  using Error::Error;
};

/// Query outside the representable range (e.g. dense evaluation off a trajectory).
class RangeError : public Error {
public:
  using Error::Error;
};

/// Expression text could not be parsed; carries the byte offset of the problem.
class ParseError : public Error {
public:
  ParseError(const std::string& msg, std::size_t offset)
      : Error(msg + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

/// Config document violates the schema; carries the offending key path.
class SchemaError : public Error {
public:
  SchemaError(const std::string& msg, const std::string& key_path)
      : Error(msg + " [" + key_path + "]"), key_path_(key_path) {}
  const std::string& key_path() const { return key_path_; }

private:
  std::string key_path_;
};

}  // namespace barrierkit
