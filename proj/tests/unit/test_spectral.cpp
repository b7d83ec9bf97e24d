#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles/dense_eigen.hpp"
#include "shearfront/eigen.hpp"
#include "shearfront/error.hpp"
#include "shearfront/spectral.hpp"

using namespace shearfront;
using doctest::Approx;

namespace {

Field random_potential(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  Field v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("principal eigenpair matches the dense solver") {
  for (int dim : {1, 2}) {
    const int n = dim == 1 ? 48 : 10;
    TorusGrid g(dim, n);
    const auto V = random_potential(g.size(), 7 + dim);
    for (double t : {0.01, 0.3, 2.0}) {
      const auto r = principal_eigpair(g, t, V);
      const auto d = oracle::principal(dim, n, t, V);
      CHECK(r.eigenvalue == Approx(d.value).epsilon(1e-9));
      CHECK(r.residual < 1e-9);
      const double scale = d.vector.minCoeff();
      for (std::size_t j = 0; j < g.size(); ++j) {
        CHECK(r.eigenfunction[j] > 0.0);
        CHECK(r.eigenfunction[j] == Approx(d.vector(j) / scale).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("t = 0 is multiplication by V") {
  TorusGrid g(1, 16);
  Field V(g.size(), 0.0);
  V[3] = 2.0;
  const auto r = principal_eigpair(g, 0.0, V);
  CHECK(r.eigenvalue == 2.0);
  CHECK(r.eigenfunction[3] > 0.0);
  CHECK(r.eigenfunction[4] == 0.0);
}

TEST_CASE("spectral laplacian agrees with the stencil at second order") {
  TorusGrid g(1, 64);
  const auto flow = flows::cosine(g);
  EigenOptions spec;
  spec.laplacian = LaplacianKind::spectral;
  const auto a = principal_eigpair(g, 0.1, flow.alpha());
  const auto b = principal_eigpair(g, 0.1, flow.alpha(), spec);
  CHECK(std::abs(a.eigenvalue - b.eigenvalue) < 1e-3);
  CHECK(std::abs(a.eigenvalue - b.eigenvalue) > 0.0);
}

TEST_CASE("dirichlet quotient of a Fourier mode") {
  TorusGrid g(1, 64);
  Field u(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) u[j] = std::cos(2 * std::numbers::pi * 2 * g.coordinate(j, 0));
  const double h = g.spacing();
  // discrete symbol of the second difference at wave number 2
  const double expect = 4 / (h * h) * std::pow(std::sin(std::numbers::pi * 2 * h), 2);
  CHECK(dirichlet_quotient(g, u) == Approx(expect).epsilon(1e-12));
}

TEST_CASE("mu(lambda): value and slope at 0, convexity") {
  TorusGrid g(1, 64);
  const auto flow = flows::cosine(g);
  const double A = 4.0, gamma = 0.15;
  CHECK(std::abs(mu_of_lambda(0.0, A, gamma, flow)) < 1e-12);
  const double h = 1e-4;
  const double slope = (mu_of_lambda(h, A, gamma, flow) - mu_of_lambda(-h, A, gamma, flow)) / (2 * h);
  CHECK(std::abs(slope + gamma) < 1e-6);
  std::vector<double> m;
  for (int k = 0; k < 50; ++k) m.push_back(mu_of_lambda(-2.0 + 0.2 * k, A, gamma, flow));
  for (std::size_t k = 1; k + 1 < m.size(); ++k) CHECK(m[k + 1] - 2 * m[k] + m[k - 1] >= -1e-10);
  CHECK(mu_of_lambda(1.3, A, gamma, flow) == Approx(oracle::mu(1, 64, flow.alpha(), 1.3, A, gamma)).epsilon(1e-9));
}

TEST_CASE("zero flow closed forms") {
  TorusGrid g(1, 32);
  const auto flow = flows::zero(g);
  for (double A : {1.0, 3.0, 8.0}) {
    const double gamma = 0.4 / A;
    CHECK(decay_rate(A, gamma, flow) == Approx(gamma * A * A).epsilon(1e-10));
    const double s = -0.75;
    const double kappa = A * A * (-gamma + std::sqrt(gamma * gamma - 4 * s / (A * A))) / 2;
    CHECK(behind_decay_rate(A, gamma, flow, s) == Approx(kappa).epsilon(1e-8));
    CHECK(kpp_minimal_speed(A, flow, 2.0) == Approx(2 * std::sqrt(2.0)).epsilon(1e-8));
  }
  CHECK(behind_decay_rate(1.0, 0.5, flow, 0.1) == 0.0);
}

TEST_CASE("decay mode eigenfunction is positive and min-normalised") {
  TorusGrid g(1, 64);
  const auto flow = flows::cosine(g);
  const auto mode = decay_mode(8.0, 0.07, flow);
  CHECK(mode.lambda > 0.0);
  double mn = 1e300;
  for (double v : mode.eigenfunction) mn = std::min(mn, v);
  CHECK(mn == Approx(1.0));
  CHECK(std::abs(mu_of_lambda(mode.lambda, 8.0, 0.07, flow)) < 1e-9);
  CHECK_THROWS_AS(decay_mode(8.0, -0.1, flow), InputError);
}

TEST_CASE("kpp limit: dual bisection and regimes") {
  TorusGrid g(1, 64);
  const auto flow = flows::cosine(g);
  const auto r = kpp_limit_speed_detail(flow, 1.0);
  CHECK(r.dirichlet_quotient == Approx(1.0).epsilon(1e-8));
  CHECK(r.value > 0.0);
  CHECK(r.value < flow.alpha_max());
  double prev = 0.0;
  for (double M : {1e-3, 1e-1, 1.0, 10.0, 1e3}) {
    const double v = kpp_limit_speed(flow, M);
    CHECK(v > prev);
    prev = v;
  }
  CHECK(kpp_limit_speed(flow, 1e3) > 0.9);
  CHECK(small_amplitude_slope(flow, 1.0) == Approx(1 / (std::sqrt(2.0) * std::numbers::pi)).epsilon(1e-3));
  CHECK(kpp_limit_speed(flow, 1e-4) / 1e-2 == Approx(small_amplitude_slope(flow, 1.0)).epsilon(0.05));
}

TEST_CASE("kpp minimal speed grows with the amplitude") {
  TorusGrid g(1, 64);
  const auto flow = flows::cosine(g);
  double prev = 2.0 - 1e-9;
  for (double A : {0.5, 2.0, 8.0, 32.0}) {
    const double c = kpp_minimal_speed(A, flow, 1.0);
    CHECK(c >= prev);
    CHECK(c <= 2.0 + A * flow.alpha_max());
    prev = c;
  }
}
