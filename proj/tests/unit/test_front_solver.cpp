#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "shearfront/error.hpp"
#include "shearfront/front_solver.hpp"
#include "shearfront/spectral.hpp"

using namespace shearfront;
using doctest::Approx;

namespace {

const TorusGrid torus(1, 16);

WindowOptions small_window() {
  WindowOptions w;
  w.n_x = 321;
  return w;
}

double column_max(const FrontSolution& s, int i) {
  double m = -1e300;
  for (std::size_t j = 0; j < s.grid.torus().size(); ++j) m = std::max(m, s.value(i, j));
  return m;
}

}  // namespace

TEST_CASE("stencils are exact on low-degree polynomials") {
  CylinderGrid g(torus, -4.0, 4.0, 161);
  Field U(g.size());
  for (int i = 0; i < g.n_x(); ++i) {
    for (std::size_t j = 0; j < torus.size(); ++j) {
      const double x = g.x(i);
      U[g.at(i, j)] = 1 + x - 0.5 * x * x + 0.1 * x * x * x - 0.02 * x * x * x * x;
    }
  }
  auto dU = [](double x) { return 1 - x + 0.3 * x * x - 0.08 * x * x * x; };
  auto d2U = [](double x) { return -1 + 0.6 * x - 0.24 * x * x; };
  for (int i : {5, 80, 150}) {
    CHECK(diffusion_derivative(g, U, i, 3) == Approx(d2U(g.x(i))).epsilon(1e-9));
    // second-order schemes carry an O(dx^2) error on a quartic
    const double h2 = g.dx() * g.dx();
    CHECK(std::abs(advection_derivative(g, U, i, 3, 1.0) - dU(g.x(i))) < 2 * h2);
    CHECK(std::abs(advection_derivative(g, U, i, 3, -1.0) - dU(g.x(i))) < 2 * h2);
    CHECK(std::abs(advection_derivative(g, U, i, 3, 1.0, AdvectionScheme::centered) - dU(g.x(i))) < h2);
  }
}

TEST_CASE("solve options are validated") {
  SolveOptions o;
  o.newton_tol = 1e-5;
  CHECK_THROWS_AS(o.validate(), InputError);
  o = {};
  o.max_newton = 0;
  CHECK_THROWS_AS(o.validate(), InputError);
}

TEST_CASE("tanh seed is pinned at x = 0") {
  const auto f = Reaction::ignition(0.25);
  CylinderGrid g(torus, -20.0, 20.0, 401);
  const auto seed = tanh_seed(g, f, 0.5);
  CHECK(seed.U[g.at(g.zero_index(), 0)] == Approx(0.25));
  CHECK(seed.U[g.at(0, 0)] > 0.99);
  CHECK(seed.gamma > 0.0);
}

TEST_CASE("cosine front at A = 2") {
  const auto flow = flows::cosine(torus);
  const auto f = Reaction::ignition(0.25);
  const auto sol = solve_front(2.0, flow, f, torus, small_window(), {});
  CHECK(sol.residual_norm < 1e-10);
  CHECK(sol.pin_defect < 1e-12);
  CHECK(column_max(sol, sol.grid.zero_index()) == Approx(0.25).epsilon(1e-12));
  CHECK(sol.monotonicity_defect <= 1e-10);
  CHECK(sol.range_defect == 0.0);
  CHECK(sol.left_defect < 1e-6);
  CHECK(sol.right_defect < 1e-6);
  CHECK(sol.gamma > 0.0);
  CHECK(sol.gamma < flow.alpha_max() + 0.6 / 2.0);

  const auto id = check_integral_identities(sol);
  CHECK(id.rel_err_reaction < 1e-3);
  CHECK(id.rel_err_energy < 5e-3);
  CHECK(id.ux_l1 == Approx(1.0).epsilon(1e-9));

  SUBCASE("shifted restart converges to the same speed") {
    FrontGuess g{sol.U, sol.gamma * 1.1};
    const int shift = 7;
    const std::size_t m = torus.size();
    for (int i = 0; i < sol.grid.n_x(); ++i) {
      const int src = std::clamp(i + shift, 0, sol.grid.n_x() - 1);
      for (std::size_t j = 0; j < m; ++j) g.U[sol.grid.at(i, j)] = sol.U[sol.grid.at(src, j)];
    }
    const auto again = solve_front_scaled(2.0, flow, f, sol.grid, g, {});
    CHECK(std::abs(again.gamma - sol.gamma) < 1e-10);
  }

  SUBCASE("exponential barrier ahead of the front") {
    const auto rep = check_exponential_barrier(sol, decay_rate(2.0, sol.gamma * 0.98, flow));
    CHECK(rep.holds);
    CHECK(rep.violations == 0);
  }
}

TEST_CASE("zero flow: c* does not depend on A") {
  const auto flow = flows::zero(torus);
  const auto f = Reaction::ignition(0.25);
  const auto curve = continuation_in_A({1, 2, 4}, flow, f, torus, small_window(), {});
  REQUIRE(curve.entries.size() == 3);
  for (const auto& e : curve.entries) {
    CHECK(e.c_star == Approx(curve.entries[0].c_star).epsilon(1e-8));
    CHECK(e.gamma_A * e.A == Approx(e.c_star));
  }
  const auto w1 = choose_window(1.0, flow, f, 0.5, torus, small_window(), 1e-6);
  const auto w4 = choose_window(4.0, flow, f, 0.125, torus, small_window(), 1e-6);
  CHECK(w4.x_min() * 4 == Approx(w1.x_min()));
  CHECK(w4.x_max() * 4 == Approx(w1.x_max()));
}

TEST_CASE("continuation ramp and ordering") {
  const auto flow = flows::cosine(torus);
  const auto curve = continuation_in_A({4, 8}, flow, Reaction::ignition(0.25), torus, small_window(), {}, false);
  CHECK_FALSE(curve.truncated);
  REQUIRE(curve.entries.size() == 2);
  CHECK(curve.ramp.size() == 2);  // A = 1, 2
  CHECK(curve.entries[0].A == 4.0);
  CHECK_FALSE(curve.entries[0].solution.has_value());
  CHECK(curve.entries[1].gamma_A < curve.entries[0].gamma_A);
  CHECK(curve.entries[1].c_star > curve.entries[0].c_star);
}

TEST_CASE("a window that is too short is reported") {
  const auto flow = flows::cosine(torus);
  const auto f = Reaction::ignition(0.25);
  CylinderGrid g(torus, -2.0, 2.0, 201);
  CHECK_THROWS_AS(solve_front_scaled(1.0, flow, f, g, tanh_seed(g, f, 0.6), {}), DomainTooShortError);
}

TEST_CASE("transfer keeps the pin") {
  const auto flow = flows::cosine(torus);
  const auto f = Reaction::ignition(0.25);
  const auto sol = solve_front(1.0, flow, f, torus, small_window(), {});
  const auto target = CylinderGrid::from_spacing(torus, 0.1, 150, 200);
  const auto g = transfer_guess(sol, target, sol.gamma);
  double m = 0.0;
  for (std::size_t j = 0; j < torus.size(); ++j) m = std::max(m, g.U[target.at(target.zero_index(), j)]);
  CHECK(m == Approx(0.25).epsilon(1e-12));
}
