#include "shearfront/spectral.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>

#include "shearfront/error.hpp"
#include "shearfront/fourier.hpp"

namespace shearfront {

namespace {

double inverse_square(double A) { return std::isinf(A) ? 0.0 : 1.0 / (A * A); }

// Potential of the torus operator whose eigenvalue is mu(lambda).
Field mu_potential(double lambda, double A, double gamma, const FlowProfile& flow) {
  const double base = inverse_square(A) * lambda * lambda - lambda * gamma;
  Field v(flow.alpha().size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = base + lambda * flow.alpha()[j];
  return v;
}

// Smallest positive root of a function that is negative just right of 0 and
// eventually positive. `fn(lambda)` returns the function value.
template <class Fn>
double positive_root(Fn&& fn, double start, double upper, const char* who) {
  double lo = start;
  double flo = fn(lo);
  for (int k = 0; k < 60 && flo >= 0.0; ++k) {
    if (flo == 0.0) return lo;
    lo *= 0.125;
    flo = fn(lo);
  }
  if (flo >= 0.0) throw InputError(std::string(who) + ": function not negative near 0");
  double hi = lo;
  double fhi = flo;
  while (fhi < 0.0) {
    lo = hi;
    flo = fhi;
    if (hi >= upper) {
      std::ostringstream msg;
      msg << who << ": no sign change up to lambda_max = " << upper;
      throw InputError(msg.str());
    }
    hi = std::min(2.0 * hi, upper);
    fhi = fn(hi);
  }
  if (fhi == 0.0) return hi;
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(fn, lo, hi, flo, fhi,
                                                        boost::math::tools::eps_tolerance<double>(50), max_iter);
  return 0.5 * (a + b);
}

}  // namespace

EigenResult mu_eigpair(double lambda, double A, double gamma, const FlowProfile& flow,
                       std::span<const double> initial) {
  const Field v = mu_potential(lambda, A, gamma, flow);
  return principal_eigpair(flow.grid(), 1.0, v, {}, initial);
}

double mu_of_lambda(double lambda, double A, double gamma, const FlowProfile& flow) {
  if (lambda == 0.0) return 0.0;
  return mu_eigpair(lambda, A, gamma, flow).eigenvalue;
}

DecayMode decay_mode(double A, double gamma, const FlowProfile& flow) {
  if (!(gamma > 0.0)) throw InputError("decay_rate: gamma must be positive");
  if (!(A > 0.0)) throw InputError("decay_rate: amplitude must be positive");
  const double upper = std::isinf(A) ? 1e6 * std::max(1.0, gamma) : 10.0 * gamma * A * A;
  Field warm;
  auto mu = [&](double lambda) {
    auto r = mu_eigpair(lambda, A, gamma, flow, warm);
    warm = std::move(r.eigenfunction);
    return r.eigenvalue;
  };
  const double start = 1e-3 * std::min(1.0, std::isinf(A) ? 1.0 : gamma * A * A);
  const double root = positive_root(mu, start, upper, "decay_rate");
  auto r = mu_eigpair(root, A, gamma, flow, warm);
  return {root, std::move(r.eigenfunction), r.eigenvalue};
}

double behind_decay_rate(double A, double gamma, const FlowProfile& flow, double slope_at_one) {
  if (slope_at_one >= 0.0) return 0.0;
  Field warm;
  auto m = [&](double kappa) {
    auto r = mu_eigpair(-kappa, A, gamma, flow, warm);
    warm = std::move(r.eigenfunction);
    return r.eigenvalue + slope_at_one;
  };
  return positive_root(m, 1e-3, 1e8, "behind_decay_rate");
}

KppSpeed kpp_minimal_speed_detail(double A, const FlowProfile& flow, double fprime0) {
  if (!(fprime0 > 0.0)) throw InputError("kpp_minimal_speed: fprime0 must be positive");
  if (!(A >= 0.0)) throw InputError("kpp_minimal_speed: amplitude must be >= 0");
  Field warm;
  auto objective = [&](double s) {
    const double lambda = std::exp(s);
    Field v(flow.alpha().size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = lambda * lambda + lambda * A * flow.alpha()[j];
    auto r = principal_eigpair(flow.grid(), 1.0, v, {}, warm);
    warm = std::move(r.eigenfunction);
    return (r.eigenvalue + fprime0) / lambda;
  };
  constexpr double lo = -6.0, hi = 6.0;
  std::uintmax_t max_iter = 500;
  const auto [s_star, c_star] =
      boost::math::tools::brent_find_minima(objective, lo, hi, std::numeric_limits<double>::digits / 2, max_iter);
  if (s_star - lo < 1e-6 || hi - s_star < 1e-6) {
    std::ostringstream msg;
    msg << "kpp_minimal_speed: minimum not bracketed in log(lambda) in [-6, 6]; objective(-6) = " << objective(lo)
        << ", objective(6) = " << objective(hi);
    throw ConvergenceError(msg.str(), c_star);
  }
  return {c_star, std::exp(s_star)};
}

KppLimitResult kpp_limit_speed_detail(const FlowProfile& flow, double fprime0) {
  if (!(fprime0 > 0.0)) throw InputError("kpp_limit_speed: fprime0 must be positive");
  KppLimitResult out;
  const TorusGrid& grid = flow.grid();
  if (flow.is_zero()) {
    out.maximiser.assign(grid.size(), 1.0);
    out.constraint_active = false;
    return out;
  }
  const Field& alpha = flow.alpha();
  Field warm;
  struct Sample {
    double t, g;
    Field w;
  };
  auto sample = [&](double t) {
    auto r = principal_eigpair(grid, t, alpha, {}, warm);
    warm = r.eigenfunction;
    return Sample{t, dirichlet_quotient(grid, r.eigenfunction), std::move(r.eigenfunction)};
  };
  auto rayleigh = [&](const Field& w) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      num += alpha[j] * w[j] * w[j];
      den += w[j] * w[j];
    }
    return num / den;
  };

  constexpr double t_floor = 1e-8;
  Sample lo = sample(t_floor);
  if (lo.g <= fprime0) {
    out.value = rayleigh(lo.w);
    out.t_star = lo.t;
    out.dirichlet_quotient = lo.g;
    out.constraint_active = false;
    out.maximiser = std::move(lo.w);
    return out;
  }
  warm.clear();
  Sample hi = sample(1.0);
  for (int k = 0; k < 200 && hi.g >= fprime0; ++k) hi = sample(hi.t * 4.0);
  if (hi.g >= fprime0) throw ConvergenceError("kpp_limit_speed: Dirichlet quotient does not drop below f'(0)", hi.g);

  // g(t) is decreasing; bisect in log t keeping g(lo) > f'(0) > g(hi).
  int steps = 0;
  while (std::log(hi.t / lo.t) > 1e-14 && steps < 200) {
    ++steps;
    Sample mid = sample(std::sqrt(lo.t * hi.t));
    // The quotient carries the eigensolver's relative error (~1e-8 when it is
    // small), so only departures well above that count as non-monotone.
    if (mid.g > lo.g * (1.0 + 1e-6) || mid.g < hi.g * (1.0 - 1e-6)) {
      std::ostringstream msg;
      msg << "kpp_limit_speed: Dirichlet quotient not monotone in t near t = " << mid.t;
      throw ConvergenceError(msg.str(), mid.g);
    }
    if (mid.g == fprime0) {
      lo = hi = std::move(mid);
      break;
    }
    (mid.g > fprime0 ? lo : hi) = std::move(mid);
  }
  Sample& best = std::abs(lo.g - fprime0) < std::abs(hi.g - fprime0) ? lo : hi;
  out.value = rayleigh(best.w);
  out.t_star = best.t;
  out.dirichlet_quotient = best.g;
  out.bisection_steps = steps;
  out.maximiser = std::move(best.w);
  return out;
}

double small_amplitude_slope(const FlowProfile& flow, double fprime0) {
  if (!(fprime0 >= 0.0)) throw InputError("small_amplitude_slope: fprime0 must be >= 0");
  const auto coeffs = fourier_transform(flow.grid(), flow.alpha());
  double sum = 0.0;
  for (std::size_t f = 0; f < coeffs.c.size(); ++f) {
    double k2 = 0.0;
    for (int d = 0; d < flow.grid().dim(); ++d) {
      const double k = coeffs.wave_number(f, d);
      k2 += k * k;
    }
    if (k2 == 0.0) continue;
    sum += std::norm(coeffs.c[f]) / (4.0 * std::numbers::pi * std::numbers::pi * k2);
  }
  return 2.0 * std::sqrt(fprime0) * std::sqrt(sum);
}

}  // namespace shearfront
