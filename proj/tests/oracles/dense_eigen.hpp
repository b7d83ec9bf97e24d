#pragma once

// Dense reference eigensolver for t * Lap + diag(V) on the periodic grid.

#include <Eigen/Dense>
#include <vector>

namespace oracle {

inline Eigen::MatrixXd laplacian_matrix(int dim, int n) {
  const int size = dim == 1 ? n : n * n;
  const double h2 = double(n) * n;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(size, size);
  auto wrap = [n](int j) { return (j % n + n) % n; };
  for (int a = 0; a < (dim == 2 ? n : 1); ++a) {
    for (int b = 0; b < n; ++b) {
      const int k = dim == 1 ? b : a * n + b;
      if (dim == 1) {
        L(k, wrap(b - 1)) += h2;
        L(k, wrap(b + 1)) += h2;
        L(k, k) -= 2 * h2;
      } else {
        L(k, a * n + wrap(b - 1)) += h2;
        L(k, a * n + wrap(b + 1)) += h2;
        L(k, wrap(a - 1) * n + b) += h2;
        L(k, wrap(a + 1) * n + b) += h2;
        L(k, k) -= 4 * h2;
      }
    }
  }
  return L;
}

struct Eigpair {
  double value;
  Eigen::VectorXd vector;
};

inline Eigpair principal(int dim, int n, double t, const std::vector<double>& V) {
  Eigen::MatrixXd M = t * laplacian_matrix(dim, n);
  for (std::size_t k = 0; k < V.size(); ++k) M(k, k) += V[k];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  const auto last = M.rows() - 1;
  Eigen::VectorXd v = es.eigenvectors().col(last);
  if (v.sum() < 0) v = -v;
  return {es.eigenvalues()(last), v};
}

/// mu(lambda) = principal eigenvalue of Lap + A^{-2} lambda^2 - lambda (gamma - alpha).
inline double mu(int dim, int n, const std::vector<double>& alpha, double lambda, double A, double gamma) {
  std::vector<double> V(alpha.size());
  for (std::size_t k = 0; k < V.size(); ++k) V[k] = lambda * lambda / (A * A) - lambda * (gamma - alpha[k]);
  return principal(dim, n, 1.0, V).value;
}

}  // namespace oracle
