#include "shearfront/eigen.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "shearfront/error.hpp"
#include "shearfront/fourier.hpp"

namespace shearfront {

void apply_laplacian(const TorusGrid& grid, std::span<const double> u, std::span<double> out) {
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto nb = grid.neighbours(j);
    double s = u[nb[0]] + u[nb[1]] - 2.0 * u[j];
    if (grid.dim() == 2) s += u[nb[2]] + u[nb[3]] - 2.0 * u[j];
    out[j] = s * inv_h2;
  }
}

double dirichlet_quotient(const TorusGrid& grid, std::span<const double> u) {
  Field lap(grid.size());
  apply_laplacian(grid, u, lap);
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    num -= u[j] * lap[j];
    den += u[j] * u[j];
  }
  return num / den;
}

namespace {

void normalise_min(Field& phi) {
  const double m = *std::min_element(phi.begin(), phi.end());
  for (auto& v : phi) v /= m;
}

EigenResult zero_diffusivity(std::span<const double> potential) {
  EigenResult out;
  const double vmax = *std::max_element(potential.begin(), potential.end());
  out.eigenvalue = vmax;
  out.eigenfunction.resize(potential.size());
  for (std::size_t j = 0; j < potential.size(); ++j) out.eigenfunction[j] = potential[j] == vmax ? 1.0 : 0.0;
  return out;
}

EigenResult spectral_eigpair(const TorusGrid& grid, double t, std::span<const double> potential) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(n, n);
  Field e(grid.size(), 0.0);
  for (Eigen::Index c = 0; c < n; ++c) {
    e[c] = 1.0;
    Field col(grid.size(), 0.0);
    for (int d = 0; d < grid.dim(); ++d) {
      std::array<int, 2> order{0, 0};
      order[d] = 2;
      const Field dd = spectral_derivative(grid, e, order);
      for (std::size_t r = 0; r < col.size(); ++r) col[r] += dd[r];
    }
    for (Eigen::Index r = 0; r < n; ++r) op(r, c) = t * col[r];
    op(c, c) += potential[c];
    e[c] = 0.0;
  }
  op = 0.5 * (op + op.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op);
  EigenResult out;
  out.eigenvalue = solver.eigenvalues()(n - 1);
  Eigen::VectorXd v = solver.eigenvectors().col(n - 1);
  if (v.sum() < 0.0) v = -v;
  out.eigenfunction.assign(v.data(), v.data() + n);
  const Eigen::VectorXd r = op * v - out.eigenvalue * v;
  out.residual = r.lpNorm<Eigen::Infinity>() / v.lpNorm<Eigen::Infinity>();
  if (*std::min_element(out.eigenfunction.begin(), out.eigenfunction.end()) > 0.0) normalise_min(out.eigenfunction);
  out.iterations = 1;
  return out;
}

}  // namespace

EigenResult principal_eigpair(const TorusGrid& grid, double t, std::span<const double> potential,
                              const EigenOptions& options, std::span<const double> initial) {
  if (!(t >= 0.0)) throw InputError("principal_eigpair: diffusivity must be >= 0");
  if (potential.size() != grid.size()) throw InputError("principal_eigpair: potential size mismatch");
  if (t == 0.0) return zero_diffusivity(potential);
  if (options.laplacian == LaplacianKind::spectral) return spectral_eigpair(grid, t, potential);

  const std::size_t n = grid.size();
  Field x(n, 1.0);
  if (!initial.empty()) {
    if (initial.size() != n) throw InputError("principal_eigpair: initial guess size mismatch");
    x.assign(initial.begin(), initial.end());
    if (*std::min_element(x.begin(), x.end()) <= 0.0) std::fill(x.begin(), x.end(), 1.0);
  }

  // Op = t * Lap + V as a sparse matrix; only its diagonal shift changes.
  using SpMat = Eigen::SparseMatrix<double>;
  const double inv_h2 = t / (grid.spacing() * grid.spacing());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n * (2 * grid.dim() + 1));
  for (std::size_t j = 0; j < n; ++j) {
    const auto nb = grid.neighbours(j);
    const auto row = static_cast<int>(j);
    triplets.emplace_back(row, row, -2.0 * grid.dim() * inv_h2 + potential[j]);
    for (int k = 0; k < 2 * grid.dim(); ++k) triplets.emplace_back(row, static_cast<int>(nb[k]), inv_h2);
  }
  SpMat op(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  op.setFromTriplets(triplets.begin(), triplets.end());
  SpMat identity(op.rows(), op.cols());
  identity.setIdentity();

  Eigen::SimplicialLDLT<SpMat> solver;
  bool analysed = false;
  const double scale = 2.0 * grid.dim() * inv_h2 + *std::max_element(potential.begin(), potential.end()) -
                       *std::min_element(potential.begin(), potential.end());
  const double floor_gap = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, scale);

  EigenResult out;
  Eigen::VectorXd xv(static_cast<Eigen::Index>(n)), yv;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= options.max_iterations; ++it) {
    for (std::size_t j = 0; j < n; ++j) xv(static_cast<Eigen::Index>(j)) = x[j];
    yv = op * xv;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index j = 0; j < xv.size(); ++j) {
      const double q = yv(j) / xv(j);
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    const double rho = xv.dot(yv) / xv.dot(xv);
    residual = (yv - rho * xv).lpNorm<Eigen::Infinity>() / xv.lpNorm<Eigen::Infinity>();
    out.iterations = it;
    if (residual <= options.tolerance) {
      out.eigenvalue = rho;
      out.residual = residual;
      out.eigenfunction = std::move(x);
      normalise_min(out.eigenfunction);
      return out;
    }
    if (it == options.max_iterations) break;

    double gap = std::max(hi - lo, floor_gap);
    for (int attempt = 0;; ++attempt) {
      const SpMat shifted = (hi + gap) * identity - op;
      if (!analysed) {
        solver.analyzePattern(shifted);
        analysed = true;
      }
      solver.factorize(shifted);
      if (solver.info() == Eigen::Success && (solver.vectorD().array() > 0.0).all()) break;
      if (attempt > 20) throw ConvergenceError("principal_eigpair: shifted operator not positive definite", residual);
      gap *= 10.0;
    }
    const Eigen::VectorXd z = solver.solve(xv);
    const double zmax = z.maxCoeff();
    for (std::size_t j = 0; j < n; ++j) {
      // Underflow in far tails of concentrated modes; keep the iterate positive.
      x[j] = std::max(z(static_cast<Eigen::Index>(j)) / zmax, std::numeric_limits<double>::min());
    }
  }
  throw ConvergenceError("principal_eigpair: no convergence after " + std::to_string(options.max_iterations) +
                             " iterations (residual " + std::to_string(residual) + ")",
                         residual);
}

}  // namespace shearfront
