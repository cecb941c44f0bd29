#pragma once

#include <stdexcept>
#include <string>

namespace fairwos {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dimension mismatch between operands; message names both shapes.
struct ShapeError : Error {
  using Error::Error;
};

// Malformed input text; message names the file and line where known.
struct ParseError : Error {
  using Error::Error;
};

// Structurally valid input that violates a semantic requirement.
struct ValidationError : Error {
  using Error::Error;
};

// NaN/Inf where a finite value is required.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace fairwos
