#pragma once

#include <optional>
#include <string>
#include <vector>

#include "shearfront/front_solver.hpp"

namespace shearfront {

enum class GammaStarRoute { sweep_extrapolation, vanishing_viscosity, cutoff_limit, kpp_formula };

std::string to_string(GammaStarRoute route);

/// One schedule point of a limit route: an amplitude A or a cut-off level
/// theta', with the value computed there.
struct RoutePoint {
  double parameter = 0.0;
  double value = 0.0;
  double error_bar = 0.0;  ///< zero for raw speeds, the inner estimate's bar otherwise
};

struct GammaStarEstimate {
  double value = 0.0;
  GammaStarRoute route = GammaStarRoute::vanishing_viscosity;
  double error_bar = 0.0;

  std::vector<RoutePoint> points;
  std::string model;  ///< extrapolation model behind `value`
  /// Ratios of consecutive differences normalised so that an exact A^{-2}
  /// law (or a geometric theta' law) gives 1 times the nominal ratio.
  std::vector<double> difference_ratios;
  bool warning = false;
  std::string warning_message;

  /// Alternative extrapolation reported next to the chosen one.
  std::string alt_model;
  double alt_value = 0.0;
  double alt_error_bar = 0.0;

  /// Strict bounds 0 < value < max alpha; not applicable to a zero flow.
  bool bounds_applicable = false;
  bool lower_strict = false;
  bool upper_strict = false;
};

/// Richardson extrapolation of gamma_A in 1/A^2 from the last two entries of
/// an already computed curve (requested entries only), with the ratio test
/// on consecutive differences. Needs >= 2 entries, >= 3 for the ratio test.
GammaStarEstimate extrapolate_viscosity(const SpeedCurve& curve, const FlowProfile& flow);

struct ViscosityResult {
  GammaStarEstimate estimate;
  SpeedCurve curve;
  std::optional<FrontSolution> profile;  ///< front at the largest amplitude
};

/// Vanishing-viscosity route: continuation over `A_schedule`, whose A^{-2}
/// U_xx term is the viscosity, then extrapolate_viscosity. Throws
/// ConvergenceError when the continuation fails before two amplitudes.
ViscosityResult gamma_star_by_viscosity(const FlowProfile& flow, const Reaction& reaction, const TorusGrid& torus,
                                        const std::vector<double>& A_schedule, const WindowOptions& wopts = {},
                                        const SolveOptions& opts = {}, const FrontSolution* seed = nullptr);

struct LimitIdentityReport {
  double gamma = 0.0;
  double reaction_integral = 0.0;  ///< int int f(U)
  double rel_gap = 0.0;            ///< |int int f(U) - gamma| / gamma
  double half_line_start = 0.0;    ///< largest x with max_y U(x, .) = theta
  double half_line_integral = 0.0; ///< int int_{x >= a} f(U)
  double half_line_rel = 0.0;      ///< relative to gamma (absolute when gamma = 0)
  double tolerance = 0.0;
  bool no_front = false;       ///< int int f(U) vanishes
  bool contradiction = false;  ///< no front but gamma > 0
  bool passes = false;
};

/// Checks int (gamma - alpha) dy = gamma against int int f(U) and the
/// half-line identity beyond the last theta crossing of max_y U.
LimitIdentityReport limit_identity_check(const CylinderGrid& grid, const Field& U, double gamma,
                                         const Reaction& reaction, double tolerance = 5e-3);
inline LimitIdentityReport limit_identity_check(const FrontSolution& sol, double tolerance = 5e-3) {
  return limit_identity_check(sol.grid, sol.U, sol.gamma, sol.reaction, tolerance);
}

/// sup |U_b - U_a| over the x-range both windows cover, U_b interpolated
/// linearly in x onto the nodes of U_a. Profiles at successive amplitudes
/// converge (along subsequences) to a limit profile; this measures the
/// change, no rate is implied. Requires identical torus grids.
double profile_difference(const FrontSolution& a, const FrontSolution& b);

enum class CutoffModel {
  log_expansion,  ///< gamma + a / L^2 + b / L^3 through the last three points, L = ln(1 / theta')
  geometric,      ///< geometric tail of the last two increments
};

std::string to_string(CutoffModel model);

struct CutoffResult {
  GammaStarEstimate estimate;
  std::vector<GammaStarEstimate> per_level;  ///< viscosity estimates, in theta' order
  int solver_calls = 0;
};

/// Cut-off route for a KPP-type reaction: the viscosity route for each
/// make_cutoff(parent, theta'), theta' strictly descending, each level seeded
/// from the previous one, then extrapolation theta' -> 0. Both models are
/// evaluated; `model` picks the reported value, the other goes to alt_*.
/// Throws ConvergenceError when the values decrease as theta' decreases by
/// more than `monotone_tol` (an under-resolved run).
CutoffResult gamma_star_by_cutoff(const FlowProfile& flow, const Reaction& parent, const TorusGrid& torus,
                                  const std::vector<double>& theta_primes, const std::vector<double>& A_schedule,
                                  const WindowOptions& wopts = {}, const SolveOptions& opts = {},
                                  CutoffModel model = CutoffModel::log_expansion, double monotone_tol = 1e-6);

/// The two extrapolations on a prepared sequence (theta' descending).
GammaStarEstimate extrapolate_cutoff(const std::vector<RoutePoint>& levels, CutoffModel model);

struct CertificateOptions {
  double margin = 0.05;     ///< excluded fraction of the x-range at each end
  double wx_floor = 1e-8;   ///< nodes with |w_x| below this are skipped
  int max_sweeps = 20;      ///< fixed-point sweeps on the upwind direction
};

struct CertificateResult {
  double bound = 0.0;
  int worst_i = 0;
  std::size_t worst_j = 0;
  int first_column = 0;
  int last_column = 0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  ///< below the w_x floor
  int sweeps = 0;
};

/// sup over the evaluation window of (Lap_y w + A^{-2} w_xx + f(w)) / (-w_x) + alpha.
/// w_x is the solver's upwind difference for the direction gamma_ref - alpha,
/// with gamma_ref iterated to the bound itself (a fixed point of the sign
/// pattern), so a converged front returns its own gamma up to the residual.
/// Throws InputError when w_x >= wx_floor somewhere in the window; flat
/// stretches (rounding noise in a tail) are skipped.
CertificateResult certificate_upper_bound(const CylinderGrid& grid, const Field& w, double A, const FlowProfile& flow,
                                          const Reaction& reaction, const CertificateOptions& copts = {});
inline CertificateResult certificate_upper_bound(const FrontSolution& sol, const CertificateOptions& copts = {}) {
  return certificate_upper_bound(sol.grid, sol.U, sol.amplitude, sol.flow, sol.reaction, copts);
}

}  // namespace shearfront
