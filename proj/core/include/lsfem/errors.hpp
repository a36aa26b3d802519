#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lsfem {

/// Bad caller input: unknown names, out-of-range indices, malformed sizes.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// PDE data that violates its contract (e.g. a diffusion matrix that is not SPD).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A method was asked to run outside the setting it is valid for.
class RestrictionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, std::size_t pivot)
      : std::runtime_error(what + " (pivot " + std::to_string(pivot) + ")"), pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

}  // namespace lsfem
