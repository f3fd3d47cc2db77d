#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lyap {

/// Base class for run-time failures of solvers and estimators.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A walk ran past its step budget before reaching its stopping event.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& what, std::int64_t budget, double censored_fraction = 1.0)
      : Error(what), budget_(budget), censored_fraction_(censored_fraction) {}
  std::int64_t budget() const { return budget_; }
  double censored_fraction() const { return censored_fraction_; }

 private:
  std::int64_t budget_;
  double censored_fraction_;
};

/// Iterative solve did not reach the requested residual.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double residual, std::int64_t sweeps)
      : Error(what + " (residual " + std::to_string(residual) + " after " + std::to_string(sweeps) + " sweeps)"),
        residual_(residual),
        sweeps_(sweeps) {}
  double residual() const { return residual_; }
  std::int64_t sweeps() const { return sweeps_; }

 private:
  double residual_;
  std::int64_t sweeps_;
};

/// The requested quantity does not exist for this input (e.g. unkilled Green's function).
class IllPosed : public Error {
 public:
  using Error::Error;
};

/// Box truncation moved an estimate by more than the configured threshold.
class TruncationError : public Error {
 public:
  using Error::Error;
};

}  // namespace lyap
