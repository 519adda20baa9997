#pragma once

#include <stdexcept>
#include <string>

namespace seamless {

// Input validation failures use std::invalid_argument / std::domain_error.
// The two types below separate numerical breakdowns from bad input data so
// that callers (the CLI in particular) can report them differently.

/// A numerical procedure could not produce a result: a correlation matrix is
/// not positive semi-definite, a root is not bracketed, an inversion failed.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data are malformed or degenerate (unreadable file, wrong column
/// layout, subgroup tables that cannot be paired, zero-variance statistics).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace seamless
