#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "shearfront/flow.hpp"
#include "shearfront/grid.hpp"
#include "shearfront/reaction.hpp"

namespace shearfront {

enum class AdvectionScheme {
  upwind2,   ///< second-order upwind, biased by the sign of gamma - alpha(y)
  centered,  ///< second-order centred; only sensible at small A
};

struct SolveOptions {
  double newton_tol = 1e-10;  ///< residual infinity norm
  int max_newton = 50;
  double damping = 1.0;  ///< first trial step of the backtracking line search
  double pseudo_time_dt = 1e-2;
  int max_pseudo_steps = 600;
  double tol_bc = 1e-6;
  double pin_sharpness = 1e3;  ///< log-sum-exp sharpness of the smoothed max
  AdvectionScheme advection = AdvectionScheme::upwind2;
  bool check_boundaries = true;

  /// Throws InputError unless all positive and newton_tol < tol_bc.
  void validate() const;
};

/// (gamma, U) solving the amplitude-scaled front problem
///   Lap_y U + A^{-2} U_xx + (gamma - alpha) U_x + f(U) = 0,
///   U(x_min) = 1, U(x_max) = 0, max_y U(0, y) = theta.
struct FrontSolution {
  double gamma = 0.0;
  double amplitude = 1.0;
  CylinderGrid grid;
  Field U;
  double residual_norm = 0.0;
  Reaction reaction;
  FlowProfile flow;

  int newton_iterations = 0;
  int pseudo_time_steps = 0;
  int factorizations = 0;
  double pin_defect = 0.0;       ///< |max_y U(0, y) - theta|
  double left_defect = 0.0;      ///< max_y (1 - U) next to x_min
  double right_defect = 0.0;     ///< max_y U next to x_max
  double monotonicity_defect = 0.0;  ///< max over node pairs of U(x_{i+1}) - U(x_i), clipped at 0
  double range_defect = 0.0;     ///< distance of U from [0, 1]

  /// Unscaled speed of the raw profile, A * (gamma + beta).
  double speed() const { return amplitude * (gamma + flow.beta()); }
  /// U(x_i, y_j).
  double value(int i, std::size_t j) const { return U[grid.at(i, j)]; }
};

/// Initial guess on a given grid.
struct FrontGuess {
  Field U;
  double gamma = 0.0;
};

/// tanh profile in x, constant in y, with its theta-level at x = 0 and decay
/// rate `rate` ahead of the front; gamma from the identity gamma = int f(U).
FrontGuess tanh_seed(const CylinderGrid& grid, const Reaction& reaction, double rate);

/// Moves `previous` onto `target`: each half-line is rescaled affinely so the
/// old window maps onto the new one, then interpolated linearly in x.
/// Requires identical torus grids.
FrontGuess transfer_guess(const FrontSolution& previous, const CylinderGrid& target, double gamma_guess);

/// Newton on the bordered (U, gamma) system with a log-sum-exp pin, then a
/// hard-max pin; pseudo-transient continuation when damped Newton stalls.
/// Throws ConvergenceError when both fail and DomainTooShortError when the
/// converged front is not flat at the truncation boundaries.
FrontSolution solve_front_scaled(double A, const FlowProfile& flow, const Reaction& reaction, const CylinderGrid& grid,
                                 const FrontGuess& init, const SolveOptions& opts = {});

/// Truncation policy: window lengths from the decay rates ahead of and behind
/// the front, n_x fixed.
struct WindowOptions {
  int n_x = 961;
  double safety = 1.5;
  int max_extensions = 3;
  double extension_factor = 1.5;
  double window_tol = 1e-4;  ///< relative window change accepted as a fixed point
  int max_refits = 4;
};

/// Window for amplitude A at trial speed gamma. Lengths scale exactly like
/// 1/A when alpha = 0 and gamma * A is held fixed.
CylinderGrid choose_window(double A, const FlowProfile& flow, const Reaction& reaction, double gamma, const TorusGrid& torus,
                           const WindowOptions& wopts, double tol_bc);

/// Solves at amplitude A with an automatically chosen window, extending it
/// after a DomainTooShortError and re-deriving it from the converged speed
/// until it stops moving. `previous` (optional) seeds the solve.
FrontSolution solve_front(double A, const FlowProfile& flow, const Reaction& reaction, const TorusGrid& torus,
                          const WindowOptions& wopts, const SolveOptions& opts, const FrontSolution* previous = nullptr,
                          double gamma_guess = std::numeric_limits<double>::quiet_NaN());

/// The discrete U_x of the advection term at interior node (i, j), with the
/// stencil chosen by the sign of a = gamma - alpha(y_j) as in the solver.
double advection_derivative(const CylinderGrid& grid, const Field& U, int i, std::size_t j, double a,
                            AdvectionScheme scheme = AdvectionScheme::upwind2);

/// The discrete U_xx of the solver at interior node (i, j): fourth-order
/// centred, second order on the first and last interior columns.
double diffusion_derivative(const CylinderGrid& grid, const Field& U, int i, std::size_t j);

struct IdentityReport {
  double reaction_integral = 0.0;  ///< int int f(U)
  double gamma = 0.0;
  double energy_lhs = 0.0;  ///< int int |grad_y U|^2 + A^{-2} U_x^2
  double energy_rhs = 0.0;  ///< int int f(U) U - gamma / 2
  double rel_err_reaction = 0.0;
  double rel_err_energy = 0.0;
  double ux_l1 = 0.0;  ///< mean over y of int |U_x| dx, 1 for a monotone front
};

IdentityReport check_integral_identities(const FrontSolution& sol);

struct BarrierReport {
  bool holds = true;
  double min_slack = 0.0;  ///< min over x >= 0 nodes of e^{-lambda x} phi(y) - U(x, y)
  int worst_i = 0;
  std::size_t worst_j = 0;
  int violations = 0;
  double phi_max = 0.0;  ///< max of phi scaled to min phi = theta
  std::vector<double> column_slack;  ///< min over y of the slack, per x >= 0 column
};

/// U(x, y) <= e^{-lambda_lower x} phi(y) for x >= 0, phi the decay eigenfunction
/// at (A, gamma_A) with min phi = theta.
BarrierReport check_exponential_barrier(const FrontSolution& sol, double lambda_lower);

struct SpeedEntry {
  double A = 0.0;
  double c_star = 0.0;  ///< A * (gamma_A + beta)
  double gamma_A = 0.0;
  IdentityReport identities;
  double wall_time = 0.0;
  bool ramp = false;  ///< inserted below the first requested amplitude
  std::optional<FrontSolution> solution;
};

struct SpeedCurve {
  std::vector<SpeedEntry> entries;  ///< requested amplitudes only, ascending
  std::vector<SpeedEntry> ramp;
  double fitted_gamma = std::numeric_limits<double>::quiet_NaN();
  double fit_intercept = std::numeric_limits<double>::quiet_NaN();
  double fit_residual = std::numeric_limits<double>::quiet_NaN();
  bool truncated = false;
  std::string failure;  ///< message of the first failed solve
  double failed_A = 0.0;
  int solver_calls = 0;
};

/// Solves along `A_list` (ascending, >= 1), each solve seeded from the last.
/// Amplitudes 1, 2, 4, ... below the first entry are solved first as a ramp,
/// unless `seed` (a nearby solution, e.g. for a neighbouring reaction) is
/// given, in which case the first solve starts from it.
/// A failure truncates the curve and records the message.
SpeedCurve continuation_in_A(const std::vector<double>& A_list, const FlowProfile& flow, const Reaction& reaction,
                             const TorusGrid& torus, const WindowOptions& wopts = {}, const SolveOptions& opts = {},
                             bool keep_solutions = true, const FrontSolution* seed = nullptr);

}  // namespace shearfront
