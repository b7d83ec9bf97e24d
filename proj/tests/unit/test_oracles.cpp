// Library results against independent reference computations.

#include <cmath>

#include "doctest.h"
#include "oracles/dense_eigen.hpp"
#include "oracles/lambda_scan.hpp"
#include "oracles/ode_shooting.hpp"
#include "oracles/projected_ascent.hpp"
#include "shearfront/front_solver.hpp"
#include "shearfront/spectral.hpp"

using namespace shearfront;
using doctest::Approx;

namespace {
double ramp(double u, double theta) { return u > theta ? (u - theta) * (1 - u) : 0.0; }
}  // namespace

TEST_CASE("shooting oracle brackets and converges") {
  const double theta = 0.25;
  auto f = [theta](double u) { return ramp(u, theta); };
  CHECK(oracle::shoot(0.3, theta, f) == -1);
  CHECK(oracle::shoot(0.9, theta, f) == +1);
  const double c = oracle::planar_wave_speed(theta, f);
  CHECK(c == Approx(0.5766995002).epsilon(1e-9));
  // a larger ignition temperature is slower
  CHECK(oracle::planar_wave_speed(0.4, [](double u) { return ramp(u, 0.4); }) < c);
}

TEST_CASE("zero-flow front speed against shooting") {
  TorusGrid torus(1, 8);
  for (double theta : {0.25, 0.4}) {
    const double c_ode = oracle::planar_wave_speed(theta, [theta](double u) { return ramp(u, theta); });
    WindowOptions w;
    w.n_x = 1441;
    const auto sol = solve_front(1.0, flows::zero(torus), Reaction::ignition(theta), torus, w, {});
    if (theta == 0.25) CHECK(std::abs(sol.speed() / c_ode - 1) < 1e-4);
    // the discrete error is second order in dx
    w.n_x = 2881;
    const auto fine = solve_front(1.0, flows::zero(torus), Reaction::ignition(theta), torus, w, {});
    CHECK(std::abs(fine.speed() / c_ode - 1) < 1e-4);
    const double ratio = (sol.speed() - c_ode) / (fine.speed() - c_ode);
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.0);
  }
}

TEST_CASE("decay rate against a lambda scan") {
  TorusGrid g(1, 64);
  const auto flow = flows::cosine(g);
  for (auto [A, gamma] : {std::pair{1.0, 0.58}, {8.0, 0.0653}, {32.0, 0.0676}}) {
    const double scan = oracle::decay_rate_scan(1, 64, flow.alpha(), A, gamma, 2.0 * gamma * A * A + 10.0);
    CHECK(decay_rate(A, gamma, flow) == Approx(scan).epsilon(1e-9));
  }
}

TEST_CASE("kpp minimal speed against a lambda scan") {
  TorusGrid g(1, 48);
  const auto flow = flows::cosine(g);
  for (double A : {0.5, 4.0, 16.0}) {
    CHECK(kpp_minimal_speed(A, flow, 1.0) == Approx(oracle::kpp_speed_scan(1, 48, flow.alpha(), A, 1.0)).epsilon(1e-8));
  }
}

TEST_CASE("kpp limit speed against projected ascent") {
  for (int dim : {1, 2}) {
    const int n = dim == 1 ? 64 : 12;
    TorusGrid g(dim, n);
    const auto flow = dim == 1 ? flows::cosine(g) : flows::two_mode(g);
    for (double M : {0.1, 1.0, 10.0}) {
      const auto asc = oracle::projected_ascent(dim, n, flow.alpha(), M);
      const auto lib = kpp_limit_speed_detail(flow, M);
      CHECK(lib.value == Approx(asc.value).epsilon(1e-4));
      CHECK(std::abs(lib.value - asc.value) < 1e-4);
      CHECK(asc.dirichlet <= M * (1 + 1e-9));
    }
  }
}

TEST_CASE("mu against the dense solver in two dimensions") {
  TorusGrid g(2, 10);
  const auto flow = flows::two_mode(g);
  for (double lambda : {-1.0, 0.5, 3.0}) {
    CHECK(mu_of_lambda(lambda, 2.0, 0.3, flow) == Approx(oracle::mu(2, 10, flow.alpha(), lambda, 2.0, 0.3)).epsilon(1e-9));
  }
}
