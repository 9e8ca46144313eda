#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nlct {

// Argument outside the mathematical domain of an operation (negative norm,
// non-finite input, radius <= 0, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Vector lengths or grid dimensions that do not agree.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Requested object would exceed the configured memory budget.
class CapacityError : public std::length_error {
public:
  using std::length_error::length_error;
};

// Invalid acquisition geometry (source inside the volume, bad spacing, ...).
class GeometryError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Config rejected by schema validation. `path()` names the offending field,
// e.g. "phantom.dims[0]".
class ValidationError : public std::invalid_argument {
public:
  ValidationError(std::string path, const std::string& what)
      : std::invalid_argument(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

// Non-finite loss during an optimization run.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(std::size_t iteration, const std::string& what)
      : std::runtime_error("diverged at iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

private:
  std::size_t iteration_;
};

}  // namespace nlct
