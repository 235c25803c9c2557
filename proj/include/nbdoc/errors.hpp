#pragma once

#include <stdexcept>
#include <string>

namespace nbdoc {

// Malformed notebook or dataset input.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Token id or class index outside the valid range.
class OutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Checkpoint is corrupt, truncated, or does not match the expected
// configuration / vocabularies.
class IncompatibleCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nbdoc
