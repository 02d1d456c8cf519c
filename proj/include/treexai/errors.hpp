#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace treexai {

// Malformed input document (JSON syntax, missing keys, wrong types).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what), byte_offset_(byte_offset) {}
  explicit ParseError(const std::string& what) : ParseError(what, 0) {}

  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

// Well-formed document describing an invalid model (bad indices, covers, cycles).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// A documented precondition of an operation was violated by the caller.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Tabular input does not match what the model or config expects.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptySelectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace treexai
