#include <cmath>
#include <numbers>

#include "doctest.h"
#include "shearfront/error.hpp"
#include "shearfront/flow.hpp"
#include "shearfront/fourier.hpp"
#include "shearfront/reaction.hpp"
#include "shearfront/serialize.hpp"

using namespace shearfront;
using doctest::Approx;

TEST_CASE("torus grid indexing") {
  TorusGrid g(2, 8);
  CHECK(g.size() == 64);
  CHECK(g.wrap(-1) == 7);
  CHECK(g.wrap(8) == 0);
  const auto flat = g.flat_index(2, 5);
  CHECK(g.multi_index(flat) == std::array<int, 2>{2, 5});
  CHECK(g.coordinate(flat, 0) == Approx(0.25));
  CHECK(g.coordinate(flat, 1) == Approx(0.625));
  const auto nb = g.neighbours(g.flat_index(0, 0));
  CHECK(nb[0] == g.flat_index(7, 0));
  CHECK(nb[3] == g.flat_index(0, 1));
  CHECK(g.refined(1).points_per_dim() == 16);
  CHECK_THROWS_AS(TorusGrid(3, 8), InputError);
}

TEST_CASE("cylinder grid keeps x = 0 on a node") {
  CylinderGrid c(TorusGrid(1, 8), -3.0, 5.0, 81);
  CHECK(c.dx() == Approx(0.1));
  CHECK(c.x(c.zero_index()) == Approx(0.0).epsilon(1e-14));
  auto r = c.refined(1);
  CHECK(r.n_x() == 161);
  CHECK(r.torus().points_per_dim() == 16);
  CHECK(r.x(r.zero_index()) == Approx(0.0).epsilon(1e-14));
  CHECK_THROWS_AS(CylinderGrid(TorusGrid(1, 8), 1.0, 5.0, 81), InputError);
}

TEST_CASE("fourier round trip and spectral derivative") {
  TorusGrid g(1, 32);
  Field f(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) f[j] = std::sin(2 * std::numbers::pi * 3 * g.coordinate(j, 0)) + 0.5;
  const auto coeffs = fourier_transform(g, f);
  CHECK(coeffs.c[0].real() == Approx(0.5));
  const auto back = inverse_fourier_transform(coeffs);
  for (std::size_t j = 0; j < g.size(); ++j) CHECK(back[j] == Approx(f[j]).epsilon(1e-12));
  const auto d = spectral_derivative(g, f, {1, 0});
  for (std::size_t j = 0; j < g.size(); ++j) {
    CHECK(d[j] == Approx(6 * std::numbers::pi * std::cos(6 * std::numbers::pi * g.coordinate(j, 0))).epsilon(1e-10));
  }
}

TEST_CASE("flow normalisation splits off the mean") {
  TorusGrid g(1, 64);
  const auto flow = flows::cosine(g, 1, 1.0, 0.3);
  CHECK(flow.beta() == Approx(0.3));
  CHECK(torus_mean(flow.alpha()) == Approx(0.0).epsilon(1e-15));
  CHECK(flow.alpha_max() == Approx(1.0));
  CHECK(flow.alpha_min() == Approx(-1.0));
  CHECK(flows::zero(g).is_zero());
  Field bad(g.size(), 0.0);
  bad[5] = std::nan("");
  CHECK_THROWS_AS(normalize_flow(g, bad), InputError);
}

TEST_CASE("nondegeneracy") {
  TorusGrid g(1, 64);
  CHECK(check_nondegeneracy(flows::cosine(g), 2).nondegenerate);
  CHECK(check_nondegeneracy(flows::two_mode(TorusGrid(2, 16)), 2).nondegenerate);
  CHECK_FALSE(check_nondegeneracy(flows::zero(g), 4).nondegenerate);
}

TEST_CASE("reactions") {
  const auto ig = Reaction::ignition(0.25);
  CHECK(ig(0.2) == 0.0);
  CHECK(ig(0.5) == Approx(0.125));
  CHECK(ig(1.0) == 0.0);
  CHECK(ig.derivative(0.5) == Approx(0.25));
  CHECK(audit_reaction(ig).ok);

  const auto kpp = Reaction::kpp(2.0);
  CHECK(kpp.fprime0() == 2.0);
  CHECK(kpp(0.5) == Approx(0.5));
  CHECK(kpp.theta() == 0.0);

  const auto cut = make_cutoff(kpp, 0.125);
  CHECK(cut.kind() == ReactionKind::cutoff);
  CHECK(cut(0.1) == 0.0);
  CHECK(cut(0.125) == 0.0);
  CHECK(cut(0.25) == Approx(kpp(0.25)));
  CHECK(cut(0.2) > 0.0);
  CHECK(cut.parent() != nullptr);
  CHECK_THROWS_AS(make_cutoff(kpp, 0.3), InputError);

  CHECK(smooth_switch(0.5) == 0.0);
  CHECK(smooth_switch(1.5) == Approx(0.5));
  CHECK(smooth_switch(2.5) == 1.0);

  CHECK_THROWS_AS(Reaction::custom("neg", ReactionKind::ignition, 0.25, 0.0,
                                   [](double u) { return u > 0.25 ? -(u - 0.25) * (1 - u) : 0.0; },
                                   [](double) { return 0.0; }),
                  InputError);
}

TEST_CASE("field records round trip") {
  CylinderGrid c(TorusGrid(1, 8), -2.0, 2.0, 81);
  Field v(c.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = 0.01 * static_cast<double>(k);
  const Json rec = cylinder_field_to_json(c, v);
  CHECK(rec["kind"] == "cylinder_field");
  const auto [c2, v2] = cylinder_field_from_json(Json::parse(rec.dump()));
  CHECK(c2.n_x() == 81);
  CHECK(c2.torus() == c.torus());
  CHECK(v2 == v);
  Json broken = rec;
  broken["values"].erase(0);
  CHECK_THROWS_AS(cylinder_field_from_json(broken), InputError);
  CHECK(number(std::nan("")).is_null());
}
