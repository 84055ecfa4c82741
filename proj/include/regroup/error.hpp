#pragma once

#include <stdexcept>
#include <string>

namespace regroup {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data: CSV parse failures, ragged rows, invariant violations.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid argument or precondition violation on an operation.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or parameters during training.
class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, int batch, const std::string& what)
      : Error("training diverged at epoch " + std::to_string(epoch) +
              ", batch " + std::to_string(batch) + ": " + what),
        epoch_(epoch),
        batch_(batch) {}

  int epoch() const { return epoch_; }
  int batch() const { return batch_; }

 private:
  int epoch_;
  int batch_;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ArgumentError(message);
}

}  // namespace detail
}  // namespace regroup
