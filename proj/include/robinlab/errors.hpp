#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace robinlab {

/// Input violates a documented precondition (bad domain parameters, beta <= 0, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Iterative solve hit its iteration cap before reaching the requested residual.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double residual, std::size_t iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

/// The discrete torsion field lost positivity: the mesh is too coarse or the input is invalid.
class DiscretizationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace robinlab
