#pragma once

#include <cstddef>

#include "shearfront/grid.hpp"

namespace shearfront {

/// Shear profile alpha(y) on the torus, stored with its grid mean split off.
/// The mean-zero part drives every solver; a speed for the raw profile is
/// recovered as c = c_meanzero + A * beta.
class FlowProfile {
 public:
  const TorusGrid& grid() const noexcept { return grid_; }
  const Field& alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  double alpha_max() const noexcept { return alpha_max_; }
  double alpha_min() const noexcept { return alpha_min_; }
  double sup_norm() const noexcept;
  bool is_zero() const noexcept { return alpha_max_ == 0.0 && alpha_min_ == 0.0; }

  /// alpha + beta at every node.
  Field raw() const;

 private:
  friend FlowProfile normalize_flow(const TorusGrid&, const Field&);
  FlowProfile(TorusGrid grid, Field alpha, double beta);

  TorusGrid grid_;
  Field alpha_;
  double beta_;
  double alpha_max_;
  double alpha_min_;
};

/// Splits `raw_profile` into its grid mean beta and mean-zero remainder.
/// Throws InputError naming the first non-finite node.
FlowProfile normalize_flow(const TorusGrid& grid, const Field& raw_profile);

namespace flows {

FlowProfile zero(const TorusGrid& grid);
/// amplitude * cos(2 pi k y_1) + offset.
FlowProfile cosine(const TorusGrid& grid, int k = 1, double amplitude = 1.0, double offset = 0.0);
/// cos(2 pi y_1) + cos(4 pi y_2) on the 2-torus, cos(2 pi y) + 0.5 cos(4 pi y) on the circle.
FlowProfile two_mode(const TorusGrid& grid);
/// Samples a callable at the torus nodes.
template <class Fn>
FlowProfile sampled(const TorusGrid& grid, Fn&& fn) {
  Field raw(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    raw[j] = grid.dim() == 1 ? fn(grid.coordinate(j, 0), 0.0) : fn(grid.coordinate(j, 0), grid.coordinate(j, 1));
  }
  return normalize_flow(grid, raw);
}

}  // namespace flows

/// Outcome of the finite-order non-degeneracy test on alpha.
struct NondegeneracyResult {
  bool nondegenerate = false;
  std::size_t worst_node = 0;
  double worst_sum = 0.0;  // sum over 1 <= |zeta| <= r of |D^zeta alpha| at worst_node
  double tolerance = 0.0;
};

/// True iff at every node some spectral derivative of alpha of order 1..r is
/// non-zero, i.e. the summed magnitudes exceed 1e-8 * |alpha|_inf.
NondegeneracyResult check_nondegeneracy(const FlowProfile& flow, int r);

}  // namespace shearfront
