#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace caml {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Denominator magnitude fell below the configured floor in a Taylor division.
class DivisionSingularity : public Error {
 public:
  using Error::Error;
};

/// exp() argument exceeded the configured overflow bound.
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// A non-finite intermediate appeared during training or differentiation.
class NumericalBlowup : public Error {
 public:
  NumericalBlowup(const std::string& what, long step, long index = -1)
      : Error(what + " (step " + std::to_string(step) +
              (index >= 0 ? ", index " + std::to_string(index) : std::string()) + ")"),
        step_(step),
        index_(index) {}
  long step() const noexcept { return step_; }
  long index() const noexcept { return index_; }

 private:
  long step_;
  long index_;
};

/// Neither the PDE nor the boundary carries a zeroth-order term, so the offset is undetermined.
class DegenerateOffset : public Error {
 public:
  using Error::Error;
};

class SolverDivergence : public Error {
 public:
  SolverDivergence(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

class DegeneratePlane : public Error {
 public:
  using Error::Error;
};

class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Bad user-facing configuration (unknown benchmark, empty sweep, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace caml
