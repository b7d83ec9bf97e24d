#include "shearfront/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "shearfront/error.hpp"
#include "shearfront/fourier.hpp"

namespace shearfront {

FlowProfile::FlowProfile(TorusGrid grid, Field alpha, double beta)
    : grid_(grid), alpha_(std::move(alpha)), beta_(beta) {
  const auto [lo, hi] = std::minmax_element(alpha_.begin(), alpha_.end());
  alpha_min_ = *lo;
  alpha_max_ = *hi;
}

double FlowProfile::sup_norm() const noexcept {
  return std::max(std::abs(alpha_max_), std::abs(alpha_min_));
}

Field FlowProfile::raw() const {
  Field out(alpha_);
  for (auto& v : out) v += beta_;
  return out;
}

FlowProfile normalize_flow(const TorusGrid& grid, const Field& raw_profile) {
  if (raw_profile.size() != grid.size()) {
    throw InputError("normalize_flow: expected " + std::to_string(grid.size()) + " samples, got " +
                     std::to_string(raw_profile.size()));
  }
  for (std::size_t j = 0; j < raw_profile.size(); ++j) {
    if (!std::isfinite(raw_profile[j])) {
      throw InputError("normalize_flow: non-finite value at node " + std::to_string(j));
    }
  }
  const double beta = torus_mean(raw_profile);
  Field alpha(raw_profile.size());
  std::transform(raw_profile.begin(), raw_profile.end(), alpha.begin(), [beta](double v) { return v - beta; });
  // A constant profile must give alpha == 0 exactly, not rounding residue.
  const bool constant = std::all_of(raw_profile.begin(), raw_profile.end(),
                                    [&](double v) { return v == raw_profile.front(); });
  if (constant) std::fill(alpha.begin(), alpha.end(), 0.0);
  return FlowProfile(grid, std::move(alpha), constant ? raw_profile.front() : beta);
}

namespace flows {

FlowProfile zero(const TorusGrid& grid) { return normalize_flow(grid, Field(grid.size(), 0.0)); }

FlowProfile cosine(const TorusGrid& grid, int k, double amplitude, double offset) {
  return sampled(grid, [&](double y0, double) {
    return amplitude * std::cos(2.0 * std::numbers::pi * k * y0) + offset;
  });
}

FlowProfile two_mode(const TorusGrid& grid) {
  const double two_pi = 2.0 * std::numbers::pi;
  if (grid.dim() == 1) {
    return sampled(grid, [&](double y, double) { return std::cos(two_pi * y) + 0.5 * std::cos(2.0 * two_pi * y); });
  }
  return sampled(grid, [&](double y0, double y1) { return std::cos(two_pi * y0) + std::cos(2.0 * two_pi * y1); });
}

}  // namespace flows

NondegeneracyResult check_nondegeneracy(const FlowProfile& flow, int r) {
  const TorusGrid& grid = flow.grid();
  if (r < 1) throw InputError("check_nondegeneracy: r must be >= 1");
  if (r > grid.points_per_dim() / 2) {
    throw InputError("check_nondegeneracy: r = " + std::to_string(r) + " exceeds points_per_dim/2 = " +
                     std::to_string(grid.points_per_dim() / 2));
  }
  Field sum(grid.size(), 0.0);
  auto accumulate = [&](std::array<int, 2> order) {
    const Field d = spectral_derivative(grid, flow.alpha(), order);
    for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += std::abs(d[j]);
  };
  for (int total = 1; total <= r; ++total) {
    if (grid.dim() == 1) {
      accumulate({total, 0});
    } else {
      for (int a = 0; a <= total; ++a) accumulate({a, total - a});
    }
  }
  NondegeneracyResult out;
  out.tolerance = 1e-8 * flow.sup_norm();
  const auto worst = std::min_element(sum.begin(), sum.end());
  out.worst_node = static_cast<std::size_t>(worst - sum.begin());
  out.worst_sum = *worst;
  out.nondegenerate = out.worst_sum > out.tolerance;
  return out;
}

}  // namespace shearfront
