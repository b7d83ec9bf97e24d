#pragma once

// Shooting for the planar travelling wave U'' + c U' + f(U) = 0, U(-inf) = 1,
// U(+inf) = 0, with f = 0 on [0, theta]. Ahead of the ignition point the wave
// is theta e^{-c x}, so the state at U = theta is (theta, -c theta); integrating
// backwards in x, a too-fast c overshoots U = 1 and a too-slow c turns back
// (U' = 0) below 1.

#include <array>
#include <boost/numeric/odeint.hpp>
#include <functional>
#include <stdexcept>

namespace oracle {

namespace detail {
struct Hit {
  int side;
};
}  // namespace detail

/// +1: U reaches 1 (c too large), -1: U' reaches 0 first (c too small).
inline int shoot(double c, double theta, const std::function<double(double)>& f, double s_max = 400.0) {
  namespace ode = boost::numeric::odeint;
  using State = std::array<double, 2>;
  State z{theta, -c * theta};
  // s = -x: du/ds = -p, dp/ds = c p + f(u)
  auto rhs = [&](const State& z, State& dz, double) {
    dz[0] = -z[1];
    dz[1] = c * z[1] + f(z[0]);
  };
  auto observe = [](const State& z, double) {
    if (z[0] >= 1.0) throw detail::Hit{+1};
    if (z[1] >= 0.0) throw detail::Hit{-1};
  };
  try {
    ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<State>>(1e-13, 1e-13), rhs, z, 0.0, s_max,
                            1e-3, observe);
  } catch (const detail::Hit& h) {
    return h.side;
  }
  throw std::runtime_error("shoot: no event before s_max");
}

/// Wave speed by bisection on the shooting outcome.
inline double planar_wave_speed(double theta, const std::function<double(double)>& f, double c_lo = 0.01,
                                double c_hi = 3.0, double tol = 1e-12) {
  if (shoot(c_lo, theta, f) != -1 || shoot(c_hi, theta, f) != +1) throw std::runtime_error("planar_wave_speed: bad bracket");
  while (c_hi - c_lo > tol) {
    const double mid = 0.5 * (c_lo + c_hi);
    (shoot(mid, theta, f) > 0 ? c_hi : c_lo) = mid;
  }
  return 0.5 * (c_lo + c_hi);
}

}  // namespace oracle
