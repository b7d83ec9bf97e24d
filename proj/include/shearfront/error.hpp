#pragma once

#include <stdexcept>
#include <string>

namespace shearfront {

/// Invalid arguments or inputs violating a documented precondition.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative method stopped without meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// A converged front does not reach its asymptotic states inside the
/// truncated cylinder.
class DomainTooShortError : public std::runtime_error {
 public:
  DomainTooShortError(const std::string& what, double left_defect, double right_defect)
      : std::runtime_error(what), left_defect_(left_defect), right_defect_(right_defect) {}

  double left_defect() const noexcept { return left_defect_; }
  double right_defect() const noexcept { return right_defect_; }

 private:
  double left_defect_;
  double right_defect_;
};

}  // namespace shearfront
