#pragma once

#include <span>

#include "shearfront/grid.hpp"

namespace shearfront {

enum class LaplacianKind {
  finite_difference,  ///< second-order centred stencil (default)
  spectral,           ///< Fourier collocation, dense; for validation only
};

struct EigenOptions {
  LaplacianKind laplacian = LaplacianKind::finite_difference;
  double tolerance = 1e-10;  ///< on |(Op - lambda) phi|_inf / |phi|_inf
  int max_iterations = 500;
};

/// Principal eigenpair of t * Laplacian + V on the torus.
struct EigenResult {
  double eigenvalue = 0.0;
  Field eigenfunction;  ///< positive, scaled so that its minimum is 1
  int iterations = 0;
  double residual = 0.0;  ///< |(Op - eigenvalue) phi|_inf / |phi|_inf
};

/// Applies the second-order periodic Laplacian.
void apply_laplacian(const TorusGrid& grid, std::span<const double> u, std::span<double> out);

/// Discrete Dirichlet form <u, -Lap u> / <u, u>.
double dirichlet_quotient(const TorusGrid& grid, std::span<const double> u);

/// Largest eigenvalue of t * Laplacian + V with its positive eigenfunction.
///
/// Inverse iteration whose shift is the Collatz-Wielandt upper bound
/// max_j (Op phi)_j / phi_j plus the current bound gap. The shift therefore
/// always lies above the principal eigenvalue, (shift - Op)^{-1} is a
/// positive operator and the iterates stay positive, while the gap shrinks
/// superlinearly. `initial`, when non-empty, must be positive.
///
/// For t == 0 the operator is multiplication by V: the eigenvalue is max V and
/// the eigenfunction is the indicator of the maximising nodes.
/// Throws ConvergenceError (with the last residual) after max_iterations.
EigenResult principal_eigpair(const TorusGrid& grid, double t, std::span<const double> potential,
                              const EigenOptions& options = {}, std::span<const double> initial = {});

}  // namespace shearfront
