#pragma once

#include <stdexcept>
#include <string>

namespace psd {

/// Bad scalar argument (non-positive step, non-unit gauge phase, ...).
class InvalidParameter : public std::invalid_argument {
 public:
  explicit InvalidParameter(const std::string& what) : std::invalid_argument(what) {}
};

/// Operand dimensions do not agree.
class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// A state collapsed to (numerically) zero norm.
class DegenerateState : public std::runtime_error {
 public:
  explicit DegenerateState(const std::string& what) : std::runtime_error(what) {}
};

/// Deterministic integration drifted outside its trace tolerance.
class IntegrationFailure : public std::runtime_error {
 public:
  explicit IntegrationFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Ensemble and master-equation runs do not describe the same system.
class InvalidComparison : public std::invalid_argument {
 public:
  explicit InvalidComparison(const std::string& what) : std::invalid_argument(what) {}
};

/// A single trajectory of an ensemble failed; carries the failing index.
class TrajectoryFailure : public std::runtime_error {
 public:
  TrajectoryFailure(std::size_t index, const std::string& what)
      : std::runtime_error("trajectory " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace psd
