#pragma once

#include <limits>

#include "shearfront/eigen.hpp"
#include "shearfront/flow.hpp"

namespace shearfront {

/// Sentinel amplitude for the degenerate (A = infinity) problem.
inline constexpr double infinite_amplitude = std::numeric_limits<double>::infinity();

/// Principal eigenvalue of Lap_y + A^{-2} lambda^2 - lambda (gamma - alpha(y)).
/// This is the exponent relation for e^{-lambda x} phi(y) solving the
/// linearisation of the scaled front equation where f vanishes. mu(0) = 0.
double mu_of_lambda(double lambda, double A, double gamma, const FlowProfile& flow);
EigenResult mu_eigpair(double lambda, double A, double gamma, const FlowProfile& flow,
                       std::span<const double> initial = {});

struct DecayMode {
  double lambda = 0.0;
  Field eigenfunction;  ///< positive, min-normalised to 1
  double mu_residual = 0.0;
};

/// The unique positive root of mu(lambda) = 0 (gamma > 0, mean-zero alpha).
/// Throws InputError when no sign change is found up to 10 gamma A^2.
DecayMode decay_mode(double A, double gamma, const FlowProfile& flow);
inline double decay_rate(double A, double gamma, const FlowProfile& flow) {
  return decay_mode(A, gamma, flow).lambda;
}

/// Rate kappa > 0 with which 1 - U ~ e^{kappa x} as x -> -infinity, i.e. the
/// positive root of mu(-kappa) = -f'(1). Returns 0 when slope_at_one >= 0.
double behind_decay_rate(double A, double gamma, const FlowProfile& flow, double slope_at_one);

/// Minimal KPP front speed for the mean-zero flow A * alpha:
/// min_{lambda > 0} (k_A(lambda) + f'(0)) / lambda with
/// k_A(lambda) the principal eigenvalue of Lap + lambda^2 + lambda A alpha.
/// Brent minimisation over log lambda in [-6, 6]; throws ConvergenceError
/// when the minimiser sits on the bracket boundary.
struct KppSpeed {
  double speed = 0.0;
  double lambda = 0.0;
};
KppSpeed kpp_minimal_speed_detail(double A, const FlowProfile& flow, double fprime0);
inline double kpp_minimal_speed(double A, const FlowProfile& flow, double fprime0) {
  return kpp_minimal_speed_detail(A, flow, fprime0).speed;
}

/// max int alpha w^2 / int w^2 over w with |grad w|^2 <= f'(0) |w|^2, by the
/// Lagrange dual: bisect on t for the principal eigenfunction w_t of
/// t Lap + alpha until its Dirichlet quotient equals f'(0).
struct KppLimitResult {
  double value = 0.0;
  double t_star = 0.0;
  double dirichlet_quotient = 0.0;
  bool constraint_active = true;
  int bisection_steps = 0;
  Field maximiser;
};
KppLimitResult kpp_limit_speed_detail(const FlowProfile& flow, double fprime0);
inline double kpp_limit_speed(const FlowProfile& flow, double fprime0) {
  return kpp_limit_speed_detail(flow, fprime0).value;
}

/// 2 sqrt(f'(0)) sup_{mean-zero w} int alpha w / |grad w|, evaluated in closed
/// form from the Fourier coefficients of alpha.
double small_amplitude_slope(const FlowProfile& flow, double fprime0);

}  // namespace shearfront
