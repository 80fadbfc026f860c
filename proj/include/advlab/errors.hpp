#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace advlab {

// Base for every error raised by the library. The CLI maps these to exit
// code 2; anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CapabilityError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed text input. `location` is a byte offset or a 1-based line
// number depending on the format; `unit` says which.
class ParseError : public Error {
 public:
  enum class Unit { byte_offset, line };

  ParseError(Unit unit, std::size_t location, const std::string& what)
      : Error(describe(unit, location, what)), unit_(unit), location_(location) {}

  Unit unit() const { return unit_; }
  std::size_t location() const { return location_; }

 private:
  static std::string describe(Unit unit, std::size_t location, const std::string& what) {
    return (unit == Unit::line ? "line " : "byte offset ") + std::to_string(location) + ": " +
           what;
  }

  Unit unit_;
  std::size_t location_;
};

}  // namespace advlab
