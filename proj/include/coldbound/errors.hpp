#pragma once

#include <stdexcept>
#include <string>

namespace coldbound {

/// Input vector or parameter layout does not match the architecture.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A closed-form term was evaluated outside its admissible lambda range.
/// Carries the constraint constant c so callers can report the boundary 1/c.
class DomainError : public std::domain_error {
public:
  DomainError(const std::string& what, double constraint)
      : std::domain_error(what), constraint_(constraint) {}
  double constraint() const noexcept { return constraint_; }

private:
  double constraint_;
};

class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class TrainingDiverged : public std::runtime_error {
public:
  TrainingDiverged(const std::string& what, int epoch)
      : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

private:
  int epoch_;
};

}  // namespace coldbound
