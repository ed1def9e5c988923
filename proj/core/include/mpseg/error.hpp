#pragma once

#include <stdexcept>

namespace mpseg {

// Invalid input data: malformed files, size mismatches, violated grid
// invariants, infeasible parameters.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem failures while reading or writing artifacts.
class IoError : public DataError {
 public:
  using DataError::DataError;
};

// Segmenter plugin misbehaviour: nonzero exit, timeout, missing or
// malformed output files.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mpseg
