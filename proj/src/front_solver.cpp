#include "shearfront/front_solver.hpp"

#include <Eigen/Sparse>
#ifdef SHEARFRONT_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#else
#include <Eigen/SparseLU>
#endif

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "shearfront/error.hpp"
#include "shearfront/spectral.hpp"

namespace shearfront {

void SolveOptions::validate() const {
  if (!(newton_tol > 0.0 && max_newton > 0 && damping > 0.0 && damping <= 1.0 && pseudo_time_dt > 0.0 &&
        max_pseudo_steps >= 0 && tol_bc > 0.0 && pin_sharpness > 0.0)) {
    throw InputError("SolveOptions: all tolerances and counts must be positive, damping in (0, 1]");
  }
  if (!(newton_tol < tol_bc)) throw InputError("SolveOptions: newton_tol must be below tol_bc");
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

struct Stencil {
  int offset[3];
  double coeff[3];
  int n;
};

// x-derivative used in the advection term, biased by the sign of a = gamma - alpha.
Stencil advection_stencil(int i, double a, double dx, int nx, AdvectionScheme scheme) {
  const double h = 0.5 / dx;
  if (scheme == AdvectionScheme::centered) return {{-1, 1, 0}, {-h, h, 0.0}, 2};
  if (a >= 0.0) {
    if (i + 2 <= nx - 1) return {{0, 1, 2}, {-3.0 * h, 4.0 * h, -h}, 3};
    return {{0, 1, 0}, {-1.0 / dx, 1.0 / dx, 0.0}, 2};
  }
  if (i - 2 >= 0) return {{0, -1, -2}, {3.0 * h, -4.0 * h, h}, 3};
  return {{0, -1, 0}, {1.0 / dx, -1.0 / dx, 0.0}, 2};
}

// Second x-difference times dx^2: fourth order in the interior, second
// order next to the Dirichlet ends.
struct XStencil {
  int offset[5];
  double coeff[5];
  int n;
};

XStencil diffusion_stencil(int i, int nx) {
  if (i >= 2 && i <= nx - 3) {
    return {{-2, -1, 0, 1, 2}, {-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0}, 5};
  }
  return {{-1, 0, 1, 0, 0}, {1.0, -2.0, 1.0, 0.0, 0.0}, 3};
}

// Discretised front operator on the interior nodes plus the pin equation.
// Unknown k = (i - 1) * m + j for interior columns i, then gamma last.
class FrontSystem {
 public:
  FrontSystem(double A, const FlowProfile& flow, const Reaction& reaction, const CylinderGrid& grid,
              const SolveOptions& opts)
      : flow_(flow), reaction_(reaction), grid_(grid), opts_(opts) {
    m_ = grid.torus().size();
    nx_ = grid.n_x();
    n_ = static_cast<std::size_t>(nx_ - 2) * m_;
    inv_h2_ = 1.0 / (grid.torus().spacing() * grid.torus().spacing());
    cxx_ = 1.0 / (A * A * grid.dx() * grid.dx());
    dx_ = grid.dx();
    i0_ = grid.zero_index();
  }

  std::size_t unknowns() const { return n_ + 1; }

  Stencil advection(int i, double a) const { return advection_stencil(i, a, dx_, nx_, opts_.advection); }

  // Smoothed or hard max of U(0, .) and its gradient weights.
  double pin_value(const Field& U, bool hard, std::vector<double>* weights) const {
    const std::size_t base = grid_.at(i0_, 0);
    double mx = U[base];
    std::size_t arg = 0;
    for (std::size_t j = 1; j < m_; ++j) {
      if (U[base + j] > mx) {
        mx = U[base + j];
        arg = j;
      }
    }
    if (hard) {
      if (weights) {
        weights->assign(m_, 0.0);
        (*weights)[arg] = 1.0;
      }
      return mx;
    }
    // Smoothed on U / theta so the offset log(m) / sharpness is relative to theta.
    const double s = opts_.pin_sharpness / reaction_.theta();
    double sum = 0.0;
    for (std::size_t j = 0; j < m_; ++j) sum += std::exp(s * (U[base + j] - mx));
    if (weights) {
      weights->resize(m_);
      for (std::size_t j = 0; j < m_; ++j) (*weights)[j] = std::exp(s * (U[base + j] - mx)) / sum;
    }
    return mx + std::log(sum) / s;
  }

  void residual(const Field& U, double gamma, bool hard, Vec& R) const {
    R.resize(static_cast<Eigen::Index>(n_ + 1));
    const TorusGrid& torus = grid_.torus();
    const Field& alpha = flow_.alpha();
    for (int i = 1; i <= nx_ - 2; ++i) {
      for (std::size_t j = 0; j < m_; ++j) {
        const std::size_t c = grid_.at(i, j);
        const auto nb = torus.neighbours(j);
        const std::size_t row = grid_.at(i, 0);
        double lap = U[row + nb[0]] + U[row + nb[1]] - 2.0 * U[c];
        if (torus.dim() == 2) lap += U[row + nb[2]] + U[row + nb[3]] - 2.0 * U[c];
        const double a = gamma - alpha[j];
        const Stencil st = advection(i, a);
        double d = 0.0;
        for (int k = 0; k < st.n; ++k) d += st.coeff[k] * U[grid_.at(i + st.offset[k], j)];
        const XStencil xs = diffusion_stencil(i, nx_);
        double dxx = 0.0;
        for (int k = 0; k < xs.n; ++k) dxx += xs.coeff[k] * U[grid_.at(i + xs.offset[k], j)];
        R(static_cast<Eigen::Index>((i - 1) * m_ + j)) = lap * inv_h2_ + cxx_ * dxx + a * d + reaction_(U[c]);
      }
    }
    R(static_cast<Eigen::Index>(n_)) = pin_value(U, hard, nullptr) - reaction_.theta();
  }

  // d R / d z minus `shift` on the U diagonal.
  void jacobian(const Field& U, double gamma, bool hard, double shift, SpMat& J) const {
    const TorusGrid& torus = grid_.torus();
    const Field& alpha = flow_.alpha();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(n_ * (2 * torus.dim() + 8) + m_);
    auto col = [&](int i, std::size_t j) { return static_cast<int>((i - 1) * m_ + j); };
    const int gcol = static_cast<int>(n_);
    for (int i = 1; i <= nx_ - 2; ++i) {
      for (std::size_t j = 0; j < m_; ++j) {
        const int r = col(i, j);
        const std::size_t c = grid_.at(i, j);
        const auto nb = torus.neighbours(j);
        double diag = -2.0 * torus.dim() * inv_h2_ + reaction_.derivative(U[c]) - shift;
        for (int k = 0; k < 2 * torus.dim(); ++k) t.emplace_back(r, col(i, nb[k]), inv_h2_);
        const XStencil xs = diffusion_stencil(i, nx_);
        for (int k = 0; k < xs.n; ++k) {
          const int ii = i + xs.offset[k];
          if (xs.offset[k] == 0) {
            diag += cxx_ * xs.coeff[k];
          } else if (ii >= 1 && ii <= nx_ - 2) {
            t.emplace_back(r, col(ii, j), cxx_ * xs.coeff[k]);
          }
        }
        const double a = gamma - alpha[j];
        const Stencil st = advection(i, a);
        double d = 0.0;
        for (int k = 0; k < st.n; ++k) {
          const int ii = i + st.offset[k];
          d += st.coeff[k] * U[grid_.at(ii, j)];
          if (st.offset[k] == 0) {
            diag += a * st.coeff[k];
          } else if (ii >= 1 && ii <= nx_ - 2) {
            t.emplace_back(r, col(ii, j), a * st.coeff[k]);
          }
        }
        t.emplace_back(r, r, diag);
        if (d != 0.0) t.emplace_back(r, gcol, d);
      }
    }
    std::vector<double> w;
    pin_value(U, hard, &w);
    for (std::size_t j = 0; j < m_; ++j) {
      if (w[j] != 0.0) t.emplace_back(gcol, col(i0_, j), w[j]);
    }
    J.resize(static_cast<Eigen::Index>(n_ + 1), static_cast<Eigen::Index>(n_ + 1));
    J.setFromTriplets(t.begin(), t.end());
  }

  // Applies dz (interior unknowns then gamma) with step t.
  void update(Field& U, double& gamma, const Vec& dz, double t) const {
    for (int i = 1; i <= nx_ - 2; ++i) {
      for (std::size_t j = 0; j < m_; ++j) {
        U[grid_.at(i, j)] += t * dz(static_cast<Eigen::Index>((i - 1) * m_ + j));
      }
    }
    gamma += t * dz(static_cast<Eigen::Index>(n_));
  }

 private:
  const FlowProfile& flow_;
  const Reaction& reaction_;
  const CylinderGrid& grid_;
  const SolveOptions& opts_;
  std::size_t m_ = 0;
  int nx_ = 0;
  std::size_t n_ = 0;
  double inv_h2_ = 0.0;
  double cxx_ = 0.0;
  double dx_ = 0.0;
  int i0_ = 0;
};

bool finite(const Vec& v) { return v.allFinite(); }

class LinearSolver {
 public:
  bool factor(const SpMat& K) {
    K_ = K;
    K_.makeCompressed();
    lu_.compute(K_);
    valid_ = lu_.info() == Eigen::Success;
    ++factorizations_;
    return valid_;
  }
  bool solve(const Vec& rhs, Vec& out) {
    out = lu_.solve(rhs);
    return lu_.info() == Eigen::Success && finite(out);
  }
  bool valid() const { return valid_; }
  void invalidate() { valid_ = false; }
  int factorizations() const { return factorizations_; }

 private:
  SpMat K_;
  bool valid_ = false;
  int factorizations_ = 0;
#ifdef SHEARFRONT_HAVE_UMFPACK
  Eigen::UmfPackLU<SpMat> lu_;
#else
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
#endif
};

struct State {
  Field U;
  double gamma = 0.0;
  double rinf = std::numeric_limits<double>::infinity();
  int newton = 0;
  int pseudo = 0;
};

// Newton with a chord shortcut: a factorisation is reused while the full
// step contracts the residual by half; otherwise the Jacobian is rebuilt and
// the step is damped by backtracking.
bool newton(const FrontSystem& sys, State& s, bool hard, double tol, const SolveOptions& opts, LinearSolver& ls) {
  Vec R, dz, Rt;
  SpMat J;
  sys.residual(s.U, s.gamma, hard, R);
  s.rinf = R.lpNorm<Eigen::Infinity>();
  int fresh_steps = 0;
  for (int it = 0; it < 4 * opts.max_newton; ++it) {
    if (!std::isfinite(s.rinf)) return false;
    if (s.rinf <= tol) return true;
    bool fresh = false;
    if (!ls.valid()) {
      if (fresh_steps++ >= opts.max_newton) return false;
      sys.jacobian(s.U, s.gamma, hard, 0.0, J);
      if (!ls.factor(J)) return false;
      fresh = true;
    }
    if (!ls.solve(-R, dz)) {
      ls.invalidate();
      if (fresh) return false;
      continue;
    }
    if (!fresh) {
      State trial = s;
      sys.update(trial.U, trial.gamma, dz, 1.0);
      sys.residual(trial.U, trial.gamma, hard, Rt);
      const double rt = Rt.lpNorm<Eigen::Infinity>();
      if (std::isfinite(rt) && rt <= 0.5 * s.rinf) {
        s.U = std::move(trial.U);
        s.gamma = trial.gamma;
        R = Rt;
        s.rinf = rt;
        ++s.newton;
      } else {
        ls.invalidate();
      }
      continue;
    }
    const double r2 = R.norm();
    double t = opts.damping;
    bool accepted = false;
    while (t >= 1.0 / 1024.0) {
      State trial = s;
      sys.update(trial.U, trial.gamma, dz, t);
      sys.residual(trial.U, trial.gamma, hard, Rt);
      if (finite(Rt) && Rt.norm() <= (1.0 - 1e-4 * t) * r2) {
        s.U = std::move(trial.U);
        s.gamma = trial.gamma;
        R = Rt;
        s.rinf = R.lpNorm<Eigen::Infinity>();
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    ++s.newton;
    if (!accepted) return false;
    if (t < 1.0) ls.invalidate();
  }
  return s.rinf <= tol;
}

// Backward-Euler pseudo time stepping with switched evolution relaxation.
bool pseudo_transient(const FrontSystem& sys, State& s, bool hard, double tol, const SolveOptions& opts,
                      LinearSolver& ls) {
  Vec R, dz, Rt;
  SpMat J;
  sys.residual(s.U, s.gamma, hard, R);
  s.rinf = R.lpNorm<Eigen::Infinity>();
  double dt = opts.pseudo_time_dt;
  ls.invalidate();
  for (int step = 0; step < opts.max_pseudo_steps; ++step) {
    if (!std::isfinite(s.rinf) || s.rinf <= tol) break;
    sys.jacobian(s.U, s.gamma, hard, 1.0 / dt, J);
    ++s.pseudo;
    // The pin is relaxed in pseudo time too; enforcing it fully in one small
    // step would demand an unbounded speed correction.
    Vec rhs = -R;
    rhs(rhs.size() - 1) *= dt / (1.0 + dt);
    if (!ls.factor(J) || !ls.solve(rhs, dz)) {
      dt *= 0.25;
      continue;
    }
    State trial = s;
    sys.update(trial.U, trial.gamma, dz, 1.0);
    sys.residual(trial.U, trial.gamma, hard, Rt);
    const double rt = Rt.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(rt) || rt > 10.0 * s.rinf) {
      dt *= 0.25;
      if (dt < 1e-12) break;
      continue;
    }
    dt = std::min(dt * std::clamp(s.rinf / rt, 0.5, 4.0), 1e14);
    s.U = std::move(trial.U);
    s.gamma = trial.gamma;
    R = Rt;
    s.rinf = rt;
  }
  ls.invalidate();
  return s.rinf <= tol;
}

double integrate_x(const CylinderGrid& grid, const std::vector<double>& column_means) {
  double s = 0.0;
  for (int i = 0; i < grid.n_x(); ++i) {
    const double w = (i == 0 || i == grid.n_x() - 1) ? 0.5 : 1.0;
    s += w * column_means[i];
  }
  return s * grid.dx();
}

}  // namespace

FrontGuess tanh_seed(const CylinderGrid& grid, const Reaction& reaction, double rate) {
  if (!(rate > 0.0)) throw InputError("tanh_seed: rate must be positive");
  const double theta = reaction.theta();
  if (!(theta > 0.0 && theta < 1.0)) throw InputError("tanh_seed: reaction needs 0 < theta < 1");
  const double w = 2.0 / rate;
  const double x0 = -w * std::atanh(1.0 - 2.0 * theta);
  FrontGuess g;
  const std::size_t m = grid.torus().size();
  g.U.resize(grid.size());
  std::vector<double> fmean(grid.n_x());
  for (int i = 0; i < grid.n_x(); ++i) {
    double v = 0.5 * (1.0 - std::tanh((grid.x(i) - x0) / w));
    if (i == 0) v = 1.0;
    if (i == grid.n_x() - 1) v = 0.0;
    if (i == grid.zero_index()) v = theta;
    for (std::size_t j = 0; j < m; ++j) g.U[grid.at(i, j)] = v;
    fmean[i] = reaction(v);
  }
  g.gamma = integrate_x(grid, fmean);
  return g;
}

FrontGuess transfer_guess(const FrontSolution& previous, const CylinderGrid& target, double gamma_guess) {
  const CylinderGrid& src = previous.grid;
  if (!(src.torus() == target.torus())) throw InputError("transfer_guess: torus grids differ");
  const std::size_t m = target.torus().size();
  FrontGuess g;
  g.gamma = gamma_guess;
  g.U.resize(target.size());
  const double left = src.x_min() / target.x_min();
  const double right = src.x_max() / target.x_max();
  for (int i = 0; i < target.n_x(); ++i) {
    const double x = target.x(i);
    const double xs = x < 0.0 ? x * left : x * right;
    double p = (xs - src.x_min()) / src.dx();
    p = std::clamp(p, 0.0, static_cast<double>(src.n_x() - 1));
    const int k = std::min(static_cast<int>(p), src.n_x() - 2);
    const double w = p - k;
    for (std::size_t j = 0; j < m; ++j) {
      g.U[target.at(i, j)] = (1.0 - w) * previous.value(k, j) + w * previous.value(k + 1, j);
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    g.U[target.at(0, j)] = 1.0;
    g.U[target.at(target.n_x() - 1, j)] = 0.0;
  }
  return g;
}

FrontSolution solve_front_scaled(double A, const FlowProfile& flow, const Reaction& reaction, const CylinderGrid& grid,
                                 const FrontGuess& init, const SolveOptions& opts) {
  opts.validate();
  if (!(A >= 1.0) || !std::isfinite(A)) throw InputError("solve_front_scaled: amplitude must be finite and >= 1");
  if (!(reaction.theta() > 0.0)) {
    throw InputError("solve_front_scaled: reaction needs a positive ignition temperature");
  }
  if (!(flow.grid() == grid.torus())) throw InputError("solve_front_scaled: flow and cylinder torus grids differ");
  if (init.U.size() != grid.size()) throw InputError("solve_front_scaled: initial guess size mismatch");

  const FrontSystem sys(A, flow, reaction, grid, opts);
  LinearSolver ls;
  State s;
  s.U = init.U;
  s.gamma = init.gamma;
  const std::size_t m = grid.torus().size();
  for (std::size_t j = 0; j < m; ++j) {
    s.U[grid.at(0, j)] = 1.0;
    s.U[grid.at(grid.n_x() - 1, j)] = 0.0;
  }

  const double soft_tol = std::max(opts.newton_tol, 1e-8);
  State soft = s;
  if (!newton(sys, soft, false, soft_tol, opts, ls)) {
    State fallback = s;
    fallback.newton = soft.newton;
    if (!pseudo_transient(sys, fallback, false, soft_tol, opts, ls)) {
      std::ostringstream msg;
      msg << "solve_front_scaled: no convergence at A = " << A << " (residual " << fallback.rinf << ")";
      throw ConvergenceError(msg.str(), fallback.rinf);
    }
    soft = std::move(fallback);
  }
  State hard = soft;
  if (!newton(sys, hard, true, opts.newton_tol, opts, ls)) {
    State fallback = soft;
    fallback.newton = hard.newton;
    if (!pseudo_transient(sys, fallback, true, opts.newton_tol, opts, ls)) {
      std::ostringstream msg;
      msg << "solve_front_scaled: hard-pin polish failed at A = " << A << " (residual " << fallback.rinf << ")";
      throw ConvergenceError(msg.str(), fallback.rinf);
    }
    hard = std::move(fallback);
  }

  FrontSolution sol{hard.gamma, A, grid, std::move(hard.U), hard.rinf, reaction, flow};
  sol.newton_iterations = hard.newton;
  sol.factorizations = ls.factorizations();
  sol.pseudo_time_steps = hard.pseudo;

  double pin = 0.0;
  for (std::size_t j = 0; j < m; ++j) pin = std::max(pin, sol.value(grid.zero_index(), j));
  sol.pin_defect = std::abs(pin - reaction.theta());
  for (std::size_t j = 0; j < m; ++j) {
    sol.left_defect = std::max(sol.left_defect, 1.0 - sol.value(1, j));
    sol.right_defect = std::max(sol.right_defect, sol.value(grid.n_x() - 2, j));
  }
  for (int i = 0; i < grid.n_x(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double u = sol.value(i, j);
      sol.range_defect = std::max({sol.range_defect, -u, u - 1.0});
      if (i + 1 < grid.n_x()) sol.monotonicity_defect = std::max(sol.monotonicity_defect, sol.value(i + 1, j) - u);
    }
  }
  if (opts.check_boundaries && (sol.left_defect > opts.tol_bc || sol.right_defect > opts.tol_bc)) {
    std::ostringstream msg;
    msg << "domain too short at A = " << A << ": 1 - U(x_min+) = " << sol.left_defect
        << ", U(x_max-) = " << sol.right_defect << " (tol_bc " << opts.tol_bc << ")";
    throw DomainTooShortError(msg.str(), sol.left_defect, sol.right_defect);
  }
  return sol;
}

namespace {

struct Window {
  double left = 0.0;   // length of [x_min, 0]
  double right = 0.0;  // length of [0, x_max]
  double lambda_ahead = 0.0;
};

Window window_lengths(double A, const FlowProfile& flow, const Reaction& reaction, double gamma,
                      const WindowOptions& wopts, double tol_bc) {
  const double theta = reaction.theta();
  const DecayMode ahead = decay_mode(A, gamma, flow);
  const double ahead_ratio = *std::max_element(ahead.eigenfunction.begin(), ahead.eigenfunction.end());
  const double slope_at_one = reaction.derivative(1.0);
  const double kappa = behind_decay_rate(A, gamma, flow, slope_at_one);
  if (!(kappa > 0.0)) throw InputError("choose_window: f'(1) must be negative");
  const auto behind = mu_eigpair(-kappa, A, gamma, flow);
  const double behind_ratio = *std::max_element(behind.eigenfunction.begin(), behind.eigenfunction.end());

  double body_rate = ahead.lambda;
  if (const Reaction* parent = reaction.parent(); parent && parent->fprime0() > 0.0) {
    body_rate = std::min(body_rate, A * kpp_minimal_speed_detail(A, flow, parent->fprime0()).lambda);
  }
  Window w;
  w.lambda_ahead = ahead.lambda;
  w.right = wopts.safety * std::log(theta * ahead_ratio / tol_bc) / ahead.lambda;
  w.left = wopts.safety * (std::log(1.0 / theta) / body_rate + std::log(behind_ratio / tol_bc) / kappa);
  return w;
}

CylinderGrid window_grid(const TorusGrid& torus, const Window& w, int n_x) {
  const double dx = (w.left + w.right) / (n_x - 1);
  const int n_left = std::clamp(static_cast<int>(std::lround(w.left / dx)), 1, n_x - 2);
  return CylinderGrid::from_spacing(torus, dx, n_left, n_x - 1 - n_left);
}

double default_gamma_guess(double A, const FlowProfile& flow, const Reaction& reaction) {
  double slope = 0.0;
  for (int k = 0; k <= 100; ++k) slope = std::max(slope, reaction.derivative(k / 100.0));
  return 0.5 * flow.alpha_max() + std::sqrt(slope) / A;
}

}  // namespace

CylinderGrid choose_window(double A, const FlowProfile& flow, const Reaction& reaction, double gamma,
                           const TorusGrid& torus, const WindowOptions& wopts, double tol_bc) {
  return window_grid(torus, window_lengths(A, flow, reaction, gamma, wopts, tol_bc), wopts.n_x);
}

FrontSolution solve_front(double A, const FlowProfile& flow, const Reaction& reaction, const TorusGrid& torus,
                          const WindowOptions& wopts, const SolveOptions& opts, const FrontSolution* previous,
                          double gamma_guess) {
  if (wopts.n_x < 64 || !(wopts.safety > 0.0) || !(wopts.extension_factor > 1.0) || wopts.max_extensions < 0 ||
      !(wopts.window_tol > 0.0) || wopts.max_refits < 0) {
    throw InputError("WindowOptions: invalid values");
  }
  double gamma = gamma_guess;
  if (!std::isfinite(gamma)) {
    gamma = previous ? previous->gamma * previous->amplitude / A : default_gamma_guess(A, flow, reaction);
  }
  // The window is re-derived from the converged speed until it is a fixed
  // point, so the truncation does not depend on the quality of the guess.
  Window base = window_lengths(A, flow, reaction, gamma, wopts, opts.tol_bc);
  double left_mult = 1.0, right_mult = 1.0;
  std::optional<FrontSolution> seed;
  if (previous) seed = *previous;
  int extensions = 0;
  for (int refit = 0;; ++refit) {
    Window w = base;
    w.left *= left_mult;
    w.right *= right_mult;
    const CylinderGrid grid = window_grid(torus, w, wopts.n_x);
    const FrontGuess guess = seed ? transfer_guess(*seed, grid, gamma) : tanh_seed(grid, reaction, w.lambda_ahead);
    std::optional<FrontSolution> sol;
    try {
      sol = solve_front_scaled(A, flow, reaction, grid, guess, opts);
    } catch (const DomainTooShortError& e) {
      if (extensions++ >= wopts.max_extensions) throw;
      if (e.left_defect() > opts.tol_bc) left_mult *= wopts.extension_factor;
      if (e.right_defect() > opts.tol_bc) right_mult *= wopts.extension_factor;
      continue;
    }
    const Window next = window_lengths(A, flow, reaction, sol->gamma, wopts, opts.tol_bc);
    const double change = std::max(std::abs(next.left / base.left - 1.0), std::abs(next.right / base.right - 1.0));
    if (change <= wopts.window_tol || refit >= wopts.max_refits) return std::move(*sol);
    base = next;
    gamma = sol->gamma;
    seed = std::move(sol);
  }
}

double advection_derivative(const CylinderGrid& grid, const Field& U, int i, std::size_t j, double a,
                            AdvectionScheme scheme) {
  if (i <= 0 || i >= grid.n_x() - 1) throw InputError("advection_derivative: node must be interior in x");
  const Stencil st = advection_stencil(i, a, grid.dx(), grid.n_x(), scheme);
  double d = 0.0;
  for (int k = 0; k < st.n; ++k) d += st.coeff[k] * U[grid.at(i + st.offset[k], j)];
  return d;
}

double diffusion_derivative(const CylinderGrid& grid, const Field& U, int i, std::size_t j) {
  if (i <= 0 || i >= grid.n_x() - 1) throw InputError("diffusion_derivative: node must be interior in x");
  const XStencil xs = diffusion_stencil(i, grid.n_x());
  double d = 0.0;
  for (int k = 0; k < xs.n; ++k) d += xs.coeff[k] * U[grid.at(i + xs.offset[k], j)];
  return d / (grid.dx() * grid.dx());
}

IdentityReport check_integral_identities(const FrontSolution& sol) {
  const CylinderGrid& grid = sol.grid;
  const TorusGrid& torus = grid.torus();
  const std::size_t m = torus.size();
  const double inv_h2 = 1.0 / (torus.spacing() * torus.spacing());
  const double inv_a2 = 1.0 / (sol.amplitude * sol.amplitude);
  std::vector<double> f_mean(grid.n_x()), fu_mean(grid.n_x()), grad_mean(grid.n_x());
  for (int i = 0; i < grid.n_x(); ++i) {
    double fs = 0.0, fus = 0.0, gs = 0.0;
    const std::size_t row = grid.at(i, 0);
    for (std::size_t j = 0; j < m; ++j) {
      const double u = sol.U[row + j];
      const double fu = sol.reaction(u);
      fs += fu;
      fus += fu * u;
      const auto nb = torus.neighbours(j);
      const double d1 = sol.U[row + nb[1]] - u;
      gs += d1 * d1;
      if (torus.dim() == 2) {
        const double d2 = sol.U[row + nb[3]] - u;
        gs += d2 * d2;
      }
    }
    f_mean[i] = fs / m;
    fu_mean[i] = fus / m;
    grad_mean[i] = gs * inv_h2 / m;
  }
  // x-gradients live on cells; the sum is the exact counterpart of the
  // second-difference operator after summation by parts.
  double ux2 = 0.0, ux1 = 0.0;
  for (int i = 0; i + 1 < grid.n_x(); ++i) {
    double s2 = 0.0, s1 = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double d = sol.value(i + 1, j) - sol.value(i, j);
      s2 += d * d;
      s1 += std::abs(d);
    }
    ux2 += s2 / m / grid.dx();
    ux1 += s1 / m;
  }
  IdentityReport r;
  r.gamma = sol.gamma;
  r.reaction_integral = integrate_x(grid, f_mean);
  r.energy_lhs = integrate_x(grid, grad_mean) + inv_a2 * ux2;
  r.energy_rhs = integrate_x(grid, fu_mean) - 0.5 * sol.gamma;
  const double scale = std::max(std::abs(sol.gamma), 1e-12);
  r.rel_err_reaction = std::abs(r.reaction_integral - sol.gamma) / scale;
  r.rel_err_energy = std::abs(r.energy_lhs - r.energy_rhs) / scale;
  r.ux_l1 = ux1;
  return r;
}

BarrierReport check_exponential_barrier(const FrontSolution& sol, double lambda_lower) {
  if (!(lambda_lower > 0.0)) throw InputError("check_exponential_barrier: lambda_lower must be positive");
  const DecayMode mode = decay_mode(sol.amplitude, sol.gamma, sol.flow);
  const double theta = sol.reaction.theta();
  const CylinderGrid& grid = sol.grid;
  const std::size_t m = grid.torus().size();
  BarrierReport r;
  r.min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) r.phi_max = std::max(r.phi_max, theta * mode.eigenfunction[j]);
  for (int i = grid.zero_index(); i < grid.n_x(); ++i) {
    const double e = std::exp(-lambda_lower * grid.x(i));
    double col = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      const double slack = e * theta * mode.eigenfunction[j] - sol.value(i, j);
      col = std::min(col, slack);
      if (slack < -1e-10) ++r.violations;
      if (slack < r.min_slack) {
        r.min_slack = slack;
        r.worst_i = i;
        r.worst_j = j;
      }
    }
    r.column_slack.push_back(col);
  }
  r.holds = r.violations == 0;
  return r;
}

SpeedCurve continuation_in_A(const std::vector<double>& A_list, const FlowProfile& flow, const Reaction& reaction,
                             const TorusGrid& torus, const WindowOptions& wopts, const SolveOptions& opts,
                             bool keep_solutions, const FrontSolution* seed) {
  if (A_list.empty()) throw InputError("continuation_in_A: empty amplitude list");
  if (!(A_list.front() >= 1.0)) throw InputError("continuation_in_A: amplitudes must be >= 1");
  for (std::size_t k = 1; k < A_list.size(); ++k) {
    if (!(A_list[k] > A_list[k - 1])) throw InputError("continuation_in_A: amplitudes must be strictly ascending");
  }
  std::vector<std::pair<double, bool>> plan;
  if (!seed) {
    for (double a = 1.0; a < A_list.front(); a *= 2.0) plan.emplace_back(a, true);
  }
  for (double a : A_list) plan.emplace_back(a, false);

  SpeedCurve curve;
  std::optional<FrontSolution> prev;
  if (seed) prev = *seed;
  std::vector<std::pair<double, double>> history;  // (A, c) of the mean-zero problem
  for (const auto& [A, ramp] : plan) {
    double guess = std::numeric_limits<double>::quiet_NaN();
    if (history.size() >= 2) {
      const auto [a0, c0] = history[history.size() - 2];
      const auto [a1, c1] = history.back();
      const double c = c1 + (c1 - c0) / (a1 - a0) * (A - a1);
      guess = c > 0.0 ? c / A : c1 / A;
    } else if (history.size() == 1) {
      guess = history.back().second / A;
    }
    const auto start = std::chrono::steady_clock::now();
    ++curve.solver_calls;
    try {
      FrontSolution sol = solve_front(A, flow, reaction, torus, wopts, opts, prev ? &*prev : nullptr, guess);
      SpeedEntry e;
      e.A = A;
      e.gamma_A = sol.gamma;
      e.c_star = sol.speed();
      e.identities = check_integral_identities(sol);
      e.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      e.ramp = ramp;
      history.emplace_back(A, A * sol.gamma);
      if (keep_solutions || ramp) e.solution = sol;
      prev = std::move(sol);
      (ramp ? curve.ramp : curve.entries).push_back(std::move(e));
    } catch (const std::exception& ex) {
      curve.truncated = true;
      curve.failure = ex.what();
      curve.failed_A = A;
      break;
    }
  }
  if (!keep_solutions) {
    for (auto& e : curve.ramp) e.solution.reset();
  }
  return curve;
}

}  // namespace shearfront
