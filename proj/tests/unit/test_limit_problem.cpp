#include <cmath>

#include "doctest.h"
#include "shearfront/error.hpp"
#include "shearfront/limit_problem.hpp"

using namespace shearfront;
using doctest::Approx;

namespace {

const TorusGrid torus(1, 16);

SpeedCurve synthetic_curve(const std::vector<double>& A, double g_inf, double a, double power) {
  SpeedCurve c;
  for (double x : A) {
    SpeedEntry e;
    e.A = x;
    e.gamma_A = g_inf + a / std::pow(x, power);
    e.c_star = x * e.gamma_A;
    c.entries.push_back(e);
  }
  return c;
}

WindowOptions small_window() {
  WindowOptions w;
  w.n_x = 321;
  return w;
}

}  // namespace

TEST_CASE("richardson in 1/A^2 is exact on an A^-2 law") {
  const auto flow = flows::cosine(torus);
  const auto e = extrapolate_viscosity(synthetic_curve({8, 16, 32, 64}, 0.065, 2.0, 2.0), flow);
  CHECK(e.value == Approx(0.065).epsilon(1e-12));
  CHECK(e.error_bar == Approx(2.0 / 4096).epsilon(1e-9));
  REQUIRE(e.difference_ratios.size() == 2);
  for (double r : e.difference_ratios) CHECK(r == Approx(4.0).epsilon(1e-9));
  CHECK_FALSE(e.warning);
  CHECK(e.bounds_applicable);
  CHECK(e.lower_strict);
  CHECK(e.upper_strict);
}

TEST_CASE("a 1/A law trips the ratio test") {
  const auto flow = flows::cosine(torus);
  const auto e = extrapolate_viscosity(synthetic_curve({8, 16, 32}, 0.065, 0.1, 1.0), flow);
  CHECK(e.difference_ratios[0] == Approx(2.0).epsilon(1e-9));
  CHECK(e.warning);
  const double g1 = 0.065 + 0.1 / 16, g2 = 0.065 + 0.1 / 32;
  CHECK(e.error_bar == Approx(std::abs(g2 - e.value) + (g1 - g2)).epsilon(1e-12));
  CHECK_THROWS_AS(extrapolate_viscosity(synthetic_curve({8}, 0.1, 0.1, 2.0), flow), InputError);
}

TEST_CASE("cutoff extrapolation models") {
  std::vector<RoutePoint> levels;
  for (int k = 2; k <= 8; ++k) {
    const double tp = std::pow(2.0, -k);
    const double L = std::log(1 / tp);
    levels.push_back({tp, 0.22 - 0.9 / (L * L) + 0.5 / (L * L * L), 1e-5});
  }
  const auto log = extrapolate_cutoff(levels, CutoffModel::log_expansion);
  CHECK(log.value == Approx(0.22).epsilon(1e-10));
  CHECK(log.route == GammaStarRoute::cutoff_limit);
  CHECK(log.alt_model == "geometric");
  // the geometric tail undershoots a logarithmic approach
  CHECK(log.alt_value < log.value);
  const auto geo = extrapolate_cutoff(levels, CutoffModel::geometric);
  CHECK(geo.value == Approx(log.alt_value));
  CHECK(geo.alt_value == Approx(log.value));

  std::vector<RoutePoint> geometric;
  for (int k = 0; k < 5; ++k) geometric.push_back({std::pow(2.0, -k - 2), 0.3 - 0.1 * std::pow(0.5, k), 0.0});
  CHECK(extrapolate_cutoff(geometric, CutoffModel::geometric).value == Approx(0.3).epsilon(1e-12));
}

TEST_CASE("viscosity route, limit identity and certificate on a real front") {
  const auto flow = flows::cosine(torus);
  const auto f = Reaction::ignition(0.25);
  const auto r = gamma_star_by_viscosity(flow, f, torus, {8, 16, 32}, small_window());
  REQUIRE(r.profile.has_value());
  CHECK(r.estimate.value > 0.0);
  CHECK(r.estimate.value < r.curve.entries.back().gamma_A);
  CHECK(r.estimate.lower_strict);
  CHECK(r.estimate.upper_strict);

  REQUIRE(r.curve.entries.size() == 3);
  const auto& s8 = *r.curve.entries[0].solution;
  const auto& s16 = *r.curve.entries[1].solution;
  const auto& s32 = *r.curve.entries[2].solution;
  CHECK(profile_difference(s16, s16) < 1e-14);
  const double d1 = profile_difference(s8, s16), d2 = profile_difference(s16, s32);
  CHECK(d1 > 0.0);
  CHECK(d1 < 1.0);
  CHECK(d2 > 0.0);
  CHECK(d2 < 1.0);
  FrontSolution other = s16;
  other.grid = CylinderGrid(TorusGrid(1, 8), s16.grid.x_min(), s16.grid.x_max(), s16.grid.n_x());
  CHECK_THROWS_AS(profile_difference(s16, other), InputError);

  const auto li = limit_identity_check(*r.profile);
  CHECK(li.passes);
  CHECK(li.rel_gap < 1e-6);
  CHECK_FALSE(li.no_front);
  CHECK(li.half_line_start == Approx(0.0).epsilon(1e-6));

  const auto cert = certificate_upper_bound(*r.profile);
  CHECK(cert.bound >= r.profile->gamma - 1e-8);
  CHECK((cert.bound - r.profile->gamma) / r.profile->gamma < 0.05);
  CHECK(cert.evaluated > 0);

  // any decreasing test profile bounds the speed from above
  const auto seed = tanh_seed(r.profile->grid, f, 1.0);
  const auto loose = certificate_upper_bound(r.profile->grid, seed.U, 32.0, flow, f);
  CHECK(loose.bound >= r.profile->gamma);

  Field flat(r.profile->U.size(), 0.5);
  CHECK_THROWS_AS(certificate_upper_bound(r.profile->grid, flat, 32.0, flow, f), InputError);

  Field rising = r.profile->U;
  for (double& v : rising) v = 1.0 - v;
  CHECK_THROWS_AS(certificate_upper_bound(r.profile->grid, rising, 32.0, flow, f), InputError);

  Field zero(r.profile->U.size(), 0.0);
  const auto none = limit_identity_check(r.profile->grid, zero, 0.05, f);
  CHECK(none.no_front);
  CHECK(none.contradiction);
  CHECK_FALSE(none.passes);
}

TEST_CASE("cutoff route on a coarse grid") {
  const auto flow = flows::cosine(torus);
  const auto res = gamma_star_by_cutoff(flow, Reaction::kpp(1.0), torus, {0.25, 0.125, 0.0625, 0.03125}, {8, 16},
                                        small_window());
  REQUIRE(res.per_level.size() == 4);
  for (std::size_t k = 1; k < res.per_level.size(); ++k) {
    CHECK(res.per_level[k].value > res.per_level[k - 1].value);
  }
  CHECK(res.estimate.value > res.per_level.back().value);
  CHECK(res.estimate.value < flow.alpha_max());
  CHECK(res.estimate.error_bar > 0.0);
  CHECK(res.solver_calls >= 8);
  CHECK_THROWS_AS(gamma_star_by_cutoff(flow, Reaction::kpp(1.0), torus, {0.125, 0.25, 0.0625}, {8, 16}, small_window()),
                  InputError);
}
