#pragma once

#include <stdexcept>
#include <string>

namespace ragan {

// Dimension mismatch between a tensor and the layer or network consuming it.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid knob: unknown tag, zero dimension, out-of-range hyperparameter.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller broke an operation's precondition (mismatched lengths, non-scalar
// loss, empty split).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Power normalization of a (numerically) all-zero signal.
class DegenerateSignalError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LoadError : public std::runtime_error {
 public:
  enum class Kind { missing_file, malformed_row, empty_file };

  LoadError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Non-finite loss during training. Carries the position where it happened.
class TrainingAbort : public std::runtime_error {
 public:
  TrainingAbort(std::size_t epoch, std::size_t iteration, const std::string& what)
      : std::runtime_error(what), epoch_(epoch), iteration_(iteration) {}

  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t epoch_;
  std::size_t iteration_;
};

}  // namespace ragan
