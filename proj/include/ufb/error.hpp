#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ufb {

//! Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

//! Non-finite or out-of-range argument.
class InvalidInput : public Error {
public:
  using Error::Error;
};

//! Malformed operator spec, schedule, grid or run configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

//! Stencil access that would leave the grid.
class IndexError : public Error {
public:
  using Error::Error;
};

//! Corrupt or unsupported binary/JSON payload.
class FormatError : public Error {
public:
  using Error::Error;
};

//! An iterative method ran out of iterations before meeting its tolerance.
class IterationLimit : public Error {
public:
  IterationLimit(const std::string &what, double last_residual, int iterations)
      : Error(what + " (residual " + std::to_string(last_residual) + " after " +
              std::to_string(iterations) + " iterations)"),
        residual(last_residual), iterations(iterations) {}
  double residual;
  int iterations;
};

//! Free-boundary geometry does not have the expected structure
//! (e.g. the number of arcs through a junction is not four).
class StructureError : public Error {
public:
  StructureError(const std::string &what, std::vector<int> counts_per_annulus)
      : Error(what), counts(std::move(counts_per_annulus)) {}
  std::vector<int> counts;
};

} // namespace ufb
