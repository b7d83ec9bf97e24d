#include "shearfront/limit_problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "shearfront/error.hpp"

namespace shearfront {

std::string to_string(GammaStarRoute route) {
  switch (route) {
    case GammaStarRoute::sweep_extrapolation: return "sweep_extrapolation";
    case GammaStarRoute::vanishing_viscosity: return "vanishing_viscosity";
    case GammaStarRoute::cutoff_limit: return "cutoff_limit";
    case GammaStarRoute::kpp_formula: return "kpp_formula";
  }
  return "unknown";
}

std::string to_string(CutoffModel model) {
  return model == CutoffModel::log_expansion ? "log_expansion" : "geometric";
}

namespace {

void set_bounds(GammaStarEstimate& e, const FlowProfile& flow) {
  e.bounds_applicable = !flow.is_zero();
  e.lower_strict = e.value > 0.0;
  e.upper_strict = e.value < flow.alpha_max();
}

void add_warning(GammaStarEstimate& e, const std::string& msg) {
  e.warning = true;
  if (!e.warning_message.empty()) e.warning_message += "; ";
  e.warning_message += msg;
}

}  // namespace

GammaStarEstimate extrapolate_viscosity(const SpeedCurve& curve, const FlowProfile& flow) {
  const auto& en = curve.entries;
  if (en.size() < 2) throw InputError("extrapolate_viscosity: need at least two amplitudes");
  GammaStarEstimate e;
  e.route = GammaStarRoute::vanishing_viscosity;
  e.model = "richardson_inv_A2";
  for (const auto& s : en) e.points.push_back({s.A, s.gamma_A, 0.0});

  const std::size_t n = en.size();
  const double a1 = en[n - 2].A, a2 = en[n - 1].A;
  const double g1 = en[n - 2].gamma_A, g2 = en[n - 1].gamma_A;
  e.value = (a2 * a2 * g2 - a1 * a1 * g1) / (a2 * a2 - a1 * a1);
  e.error_bar = std::abs(g2 - e.value);

  bool consistent = true;
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const double d0 = en[k].gamma_A - en[k + 1].gamma_A;
    const double d1 = en[k + 1].gamma_A - en[k + 2].gamma_A;
    const double p0 = 1.0 / (en[k].A * en[k].A), p1 = 1.0 / (en[k + 1].A * en[k + 1].A),
                 p2 = 1.0 / (en[k + 2].A * en[k + 2].A);
    const double expected = (p0 - p1) / (p1 - p2);
    const double ratio = d1 != 0.0 ? d0 / d1 * 4.0 / expected : std::numeric_limits<double>::infinity();
    e.difference_ratios.push_back(ratio);
    if (!(ratio >= 2.5 && ratio <= 6.0)) consistent = false;
  }
  e.alt_model = "last_raw";
  e.alt_value = g2;
  e.alt_error_bar = std::abs(g2 - g1);
  if (!consistent) {
    e.error_bar += std::abs(g2 - g1);
    add_warning(e, "differences of gamma_A not consistent with an A^-2 law; error bar inflated");
  }
  if (curve.truncated) add_warning(e, "continuation truncated at A = " + std::to_string(curve.failed_A));
  set_bounds(e, flow);
  return e;
}

ViscosityResult gamma_star_by_viscosity(const FlowProfile& flow, const Reaction& reaction, const TorusGrid& torus,
                                        const std::vector<double>& A_schedule, const WindowOptions& wopts,
                                        const SolveOptions& opts, const FrontSolution* seed) {
  if (A_schedule.size() < 2) throw InputError("gamma_star_by_viscosity: need at least two amplitudes");
  ViscosityResult r;
  r.curve = continuation_in_A(A_schedule, flow, reaction, torus, wopts, opts, true, seed);
  if (r.curve.entries.size() < 2) {
    throw ConvergenceError("gamma_star_by_viscosity: continuation failed at A = " + std::to_string(r.curve.failed_A) +
                               ": " + r.curve.failure,
                           std::numeric_limits<double>::quiet_NaN());
  }
  r.estimate = extrapolate_viscosity(r.curve, flow);
  r.profile = r.curve.entries.back().solution;
  return r;
}

double profile_difference(const FrontSolution& a, const FrontSolution& b) {
  const CylinderGrid& ga = a.grid;
  const CylinderGrid& gb = b.grid;
  if (!(ga.torus() == gb.torus())) throw InputError("profile_difference: torus grids differ");
  const std::size_t m = ga.torus().size();
  double d = 0.0;
  for (int i = 0; i < ga.n_x(); ++i) {
    const double x = ga.x(i);
    if (x < gb.x_min() || x > gb.x_max()) continue;
    const double s = (x - gb.x_min()) / gb.dx();
    const int k = std::min(static_cast<int>(s), gb.n_x() - 2);
    const double t = s - k;
    for (std::size_t j = 0; j < m; ++j) {
      const double ub = (1.0 - t) * b.value(k, j) + t * b.value(k + 1, j);
      d = std::max(d, std::abs(a.value(i, j) - ub));
    }
  }
  return d;
}

LimitIdentityReport limit_identity_check(const CylinderGrid& grid, const Field& U, double gamma,
                                         const Reaction& reaction, double tolerance) {
  if (U.size() != grid.size()) throw InputError("limit_identity_check: field does not match grid");
  const std::size_t m = grid.torus().size();
  const int nx = grid.n_x();
  std::vector<double> fmean(nx), colmax(nx);
  for (int i = 0; i < nx; ++i) {
    double s = 0.0, mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      const double u = U[grid.at(i, j)];
      s += reaction(u);
      mx = std::max(mx, u);
    }
    fmean[i] = s / m;
    colmax[i] = mx;
  }
  const double dx = grid.dx();
  LimitIdentityReport r;
  r.gamma = gamma;
  r.tolerance = tolerance;
  for (int i = 0; i + 1 < nx; ++i) r.reaction_integral += 0.5 * dx * (fmean[i] + fmean[i + 1]);

  // Half line beyond the last theta crossing of the column maximum.
  const double theta = reaction.theta();
  int last = -1;
  for (int i = 0; i < nx; ++i) {
    if (colmax[i] >= theta) last = i;
  }
  if (last < 0) {
    r.half_line_start = grid.x_min();
    r.half_line_integral = r.reaction_integral;
  } else if (last == nx - 1) {
    r.half_line_start = grid.x_max();
  } else {
    const double t = colmax[last] > colmax[last + 1] ? (colmax[last] - theta) / (colmax[last] - colmax[last + 1]) : 0.0;
    r.half_line_start = grid.x(last) + t * dx;
    const double fa = fmean[last] + t * (fmean[last + 1] - fmean[last]);
    double s = 0.5 * (1.0 - t) * dx * (fa + fmean[last + 1]);
    for (int i = last + 1; i + 1 < nx; ++i) s += 0.5 * dx * (fmean[i] + fmean[i + 1]);
    r.half_line_integral = s;
  }

  r.no_front = std::abs(r.reaction_integral) <= 1e-12;
  r.contradiction = r.no_front && gamma > 0.0;
  const double scale = std::abs(gamma) > 0.0 ? std::abs(gamma) : 1.0;
  r.rel_gap = std::abs(r.reaction_integral - gamma) / scale;
  r.half_line_rel = std::abs(r.half_line_integral) / scale;
  r.passes = !r.no_front && r.rel_gap < tolerance && r.half_line_rel < tolerance;
  return r;
}

namespace {

struct TailFit {
  double value = 0.0;
  bool ok = false;
};

// Geometric tail through three consecutive values.
TailFit geometric_tail(double g0, double g1, double g2) {
  const double d0 = g1 - g0, d1 = g2 - g1;
  if (d0 == 0.0) return {g2, d1 == 0.0};
  const double r = d1 / d0;
  if (!(r >= 0.0 && r < 1.0)) return {g2, false};
  return {g2 + d1 * r / (1.0 - r), true};
}

// gamma + a / L^2 + b / L^3 through three points, L = ln(1 / theta').
TailFit log_tail(const RoutePoint* p) {
  Eigen::Matrix3d M;
  Eigen::Vector3d rhs;
  for (int k = 0; k < 3; ++k) {
    const double L = std::log(1.0 / p[k].parameter);
    M(k, 0) = 1.0;
    M(k, 1) = 1.0 / (L * L);
    M(k, 2) = 1.0 / (L * L * L);
    rhs(k) = p[k].value;
  }
  const Eigen::Vector3d c = M.fullPivLu().solve(rhs);
  return {c(0), std::isfinite(c(0))};
}

}  // namespace

GammaStarEstimate extrapolate_cutoff(const std::vector<RoutePoint>& levels, CutoffModel model) {
  const std::size_t n = levels.size();
  if (n < 3) throw InputError("extrapolate_cutoff: need at least three cut-off levels");
  for (std::size_t k = 0; k < n; ++k) {
    if (!(levels[k].parameter > 0.0 && levels[k].parameter < 1.0) ||
        (k > 0 && !(levels[k].parameter < levels[k - 1].parameter))) {
      throw InputError("extrapolate_cutoff: levels must be strictly descending in (0, 1)");
    }
  }
  GammaStarEstimate e;
  e.route = GammaStarRoute::cutoff_limit;
  e.points = levels;
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const double d0 = levels[k + 1].value - levels[k].value;
    const double d1 = levels[k + 2].value - levels[k + 1].value;
    e.difference_ratios.push_back(d0 != 0.0 ? d1 / d0 : std::numeric_limits<double>::infinity());
  }
  const double inner = levels.back().error_bar;
  const double last_increment = std::abs(levels[n - 1].value - levels[n - 2].value);

  const TailFit geo = geometric_tail(levels[n - 3].value, levels[n - 2].value, levels[n - 1].value);
  const double geo_bar = (geo.ok ? last_increment : 100.0 * last_increment) + inner;

  const TailFit lg = log_tail(&levels[n - 3]);
  double lg_bar = last_increment;
  if (n >= 4) {
    const TailFit prev = log_tail(&levels[n - 4]);
    if (prev.ok) lg_bar = std::abs(lg.value - prev.value);
  }
  lg_bar += inner;

  const bool use_log = model == CutoffModel::log_expansion;
  e.model = to_string(model);
  e.alt_model = to_string(use_log ? CutoffModel::geometric : CutoffModel::log_expansion);
  e.value = use_log ? lg.value : geo.value;
  e.error_bar = use_log ? lg_bar : geo_bar;
  e.alt_value = use_log ? geo.value : lg.value;
  e.alt_error_bar = use_log ? geo_bar : lg_bar;
  if (!geo.ok && !use_log) add_warning(e, "increments not geometrically decaying; error bar inflated");
  if (!lg.ok && use_log) add_warning(e, "log-expansion fit singular");
  return e;
}

CutoffResult gamma_star_by_cutoff(const FlowProfile& flow, const Reaction& parent, const TorusGrid& torus,
                                  const std::vector<double>& theta_primes, const std::vector<double>& A_schedule,
                                  const WindowOptions& wopts, const SolveOptions& opts, CutoffModel model,
                                  double monotone_tol) {
  if (parent.kind() != ReactionKind::kpp) throw InputError("gamma_star_by_cutoff: parent reaction must be KPP");
  if (theta_primes.size() < 3) throw InputError("gamma_star_by_cutoff: need at least three cut-off levels");
  for (std::size_t k = 1; k < theta_primes.size(); ++k) {
    if (!(theta_primes[k] < theta_primes[k - 1])) {
      throw InputError("gamma_star_by_cutoff: cut-off levels must be strictly descending");
    }
  }
  CutoffResult out;
  std::vector<RoutePoint> levels;
  std::optional<FrontSolution> seed;
  for (double tp : theta_primes) {
    const Reaction f = make_cutoff(parent, tp);
    ViscosityResult v = gamma_star_by_viscosity(flow, f, torus, A_schedule, wopts, opts, seed ? &*seed : nullptr);
    if (!levels.empty() && v.estimate.value < levels.back().value - monotone_tol) {
      throw ConvergenceError("gamma_star_by_cutoff: value decreased from " + std::to_string(levels.back().value) +
                                 " to " + std::to_string(v.estimate.value) + " at theta' = " + std::to_string(tp) +
                                 " (under-resolved)",
                             levels.back().value - v.estimate.value);
    }
    out.solver_calls += v.curve.solver_calls;
    levels.push_back({tp, v.estimate.value, v.estimate.error_bar});
    seed = std::move(v.curve.entries.front().solution);
    out.per_level.push_back(std::move(v.estimate));
  }
  out.estimate = extrapolate_cutoff(levels, model);
  for (const auto& lv : out.per_level) {
    if (lv.warning) add_warning(out.estimate, "theta' = " + std::to_string(lv.points.empty() ? 0.0 : lv.points[0].parameter) + ": " + lv.warning_message);
  }
  set_bounds(out.estimate, flow);
  return out;
}

namespace {

struct CertificatePass {
  double bound = -std::numeric_limits<double>::infinity();
  int worst_i = 0;
  std::size_t worst_j = 0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

CertificatePass certificate_pass(const CylinderGrid& grid, const Field& w, double A, const FlowProfile& flow,
                                 const Reaction& reaction, int i0, int i1, double gamma_ref, AdvectionScheme scheme,
                                 double floor) {
  const TorusGrid& torus = grid.torus();
  const std::size_t m = torus.size();
  const double inv_h2 = 1.0 / (torus.spacing() * torus.spacing());
  const double inv_a2 = 1.0 / (A * A);
  const Field& alpha = flow.alpha();
  CertificatePass p;
  for (int i = i0; i <= i1; ++i) {
    const std::size_t row = grid.at(i, 0);
    for (std::size_t j = 0; j < m; ++j) {
      const double wx = advection_derivative(grid, w, i, j, gamma_ref - alpha[j], scheme);
      if (!(wx < floor)) {
        throw InputError("certificate_upper_bound: w_x >= " + std::to_string(floor) + " at x = " +
                         std::to_string(grid.x(i)));
      }
      if (-wx < floor) {
        ++p.skipped;
        continue;
      }
      const auto nb = torus.neighbours(j);
      const double c = w[row + j];
      double lap = w[row + nb[0]] + w[row + nb[1]] - 2.0 * c;
      if (torus.dim() == 2) lap += w[row + nb[2]] + w[row + nb[3]] - 2.0 * c;
      const double num = lap * inv_h2 + inv_a2 * diffusion_derivative(grid, w, i, j) + reaction(c);
      const double q = num / (-wx) + alpha[j];
      ++p.evaluated;
      if (q > p.bound) {
        p.bound = q;
        p.worst_i = i;
        p.worst_j = j;
      }
    }
  }
  return p;
}

}  // namespace

CertificateResult certificate_upper_bound(const CylinderGrid& grid, const Field& w, double A, const FlowProfile& flow,
                                          const Reaction& reaction, const CertificateOptions& copts) {
  if (w.size() != grid.size()) throw InputError("certificate_upper_bound: field does not match grid");
  if (!(grid.torus() == flow.grid())) throw InputError("certificate_upper_bound: flow lives on another torus grid");
  if (!(A > 0.0) || !(copts.margin >= 0.0 && copts.margin < 0.5) || !(copts.wx_floor >= 0.0) || copts.max_sweeps < 1) {
    throw InputError("certificate_upper_bound: invalid arguments");
  }
  const int nx = grid.n_x();
  const int i0 = std::max(2, static_cast<int>(std::ceil(copts.margin * (nx - 1))));
  const int i1 = std::min(nx - 3, static_cast<int>(std::floor((1.0 - copts.margin) * (nx - 1))));
  if (i0 > i1) throw InputError("certificate_upper_bound: empty evaluation window");

  CertificatePass p =
      certificate_pass(grid, w, A, flow, reaction, i0, i1, 0.0, AdvectionScheme::centered, copts.wx_floor);
  if (p.evaluated == 0) throw InputError("certificate_upper_bound: no node above the w_x floor");
  // The upwind direction depends on gamma_ref - alpha only through its sign
  // pattern; iterate until the pattern reproduces itself.
  const Field& alpha = flow.alpha();
  auto pattern = [&](double g) {
    std::vector<bool> s(alpha.size());
    for (std::size_t j = 0; j < alpha.size(); ++j) s[j] = g - alpha[j] >= 0.0;
    return s;
  };
  double gamma_ref = p.bound;
  double worst = -std::numeric_limits<double>::infinity();
  CertificateResult r;
  for (int sweep = 1; sweep <= copts.max_sweeps; ++sweep) {
    p = certificate_pass(grid, w, A, flow, reaction, i0, i1, gamma_ref, AdvectionScheme::upwind2, copts.wx_floor);
    r.sweeps = sweep;
    const bool fixed = pattern(p.bound) == pattern(gamma_ref);
    worst = std::max(worst, p.bound);
    if (fixed) {
      worst = p.bound;
      break;
    }
    gamma_ref = p.bound;
  }
  r.bound = worst;
  r.worst_i = p.worst_i;
  r.worst_j = p.worst_j;
  r.first_column = i0;
  r.last_column = i1;
  r.evaluated = p.evaluated;
  r.skipped = p.skipped;
  return r;
}

}  // namespace shearfront
