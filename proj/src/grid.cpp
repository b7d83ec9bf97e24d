#include "shearfront/grid.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "shearfront/error.hpp"

namespace shearfront {

TorusGrid::TorusGrid(int dim, int points_per_dim) : dim_(dim), n_(points_per_dim) {
  if (dim != 1 && dim != 2) {
    throw InputError("TorusGrid: dim must be 1 or 2, got " + std::to_string(dim));
  }
  if (points_per_dim < 8) {
    throw InputError("TorusGrid: points_per_dim must be >= 8, got " + std::to_string(points_per_dim));
  }
  size_ = dim == 1 ? static_cast<std::size_t>(n_) : static_cast<std::size_t>(n_) * n_;
}

std::array<int, 2> TorusGrid::multi_index(std::size_t flat) const noexcept {
  if (dim_ == 1) return {static_cast<int>(flat), 0};
  return {static_cast<int>(flat / n_), static_cast<int>(flat % n_)};
}

std::size_t TorusGrid::flat_index(int j0, int j1) const noexcept {
  if (dim_ == 1) return static_cast<std::size_t>(wrap(j0));
  return static_cast<std::size_t>(wrap(j0)) * n_ + static_cast<std::size_t>(wrap(j1));
}

double TorusGrid::coordinate(std::size_t flat, int d) const noexcept {
  return multi_index(flat)[d] * spacing();
}

std::array<std::size_t, 4> TorusGrid::neighbours(std::size_t flat) const noexcept {
  const auto [j0, j1] = multi_index(flat);
  if (dim_ == 1) {
    return {flat_index(j0 - 1), flat_index(j0 + 1), flat, flat};
  }
  return {flat_index(j0 - 1, j1), flat_index(j0 + 1, j1), flat_index(j0, j1 - 1), flat_index(j0, j1 + 1)};
}

TorusGrid TorusGrid::refined(int times) const {
  return TorusGrid(dim_, n_ << times);
}

CylinderGrid::CylinderGrid(TorusGrid torus, double x_min, double x_max, int n_x)
    : torus_(torus), x_min_(x_min), x_max_(x_max), n_x_(n_x) {
  if (!(x_min < 0.0 && 0.0 < x_max)) {
    throw InputError("CylinderGrid: need x_min < 0 < x_max");
  }
  if (n_x < 64) {
    throw InputError("CylinderGrid: n_x must be >= 64, got " + std::to_string(n_x));
  }
  dx_ = (x_max - x_min) / (n_x - 1);
  const double k = -x_min / dx_;
  zero_index_ = static_cast<int>(std::lround(k));
  if (std::abs(k - zero_index_) > 1e-9 * std::max(1.0, k)) {
    throw InputError("CylinderGrid: x = 0 is not a grid node");
  }
}

CylinderGrid CylinderGrid::from_spacing(TorusGrid torus, double dx, int n_left, int n_right) {
  if (!(dx > 0.0) || n_left < 1 || n_right < 1) {
    throw InputError("CylinderGrid::from_spacing: invalid spacing or node counts");
  }
  return CylinderGrid(torus, -dx * n_left, dx * n_right, n_left + n_right + 1);
}

CylinderGrid CylinderGrid::refined(int times) const {
  if (times <= 0) return *this;
  return CylinderGrid(torus_.refined(times), x_min_, x_max_, ((n_x_ - 1) << times) + 1);
}

double torus_mean(const Field& values) {
  if (values.empty()) return 0.0;
  // Pairwise-stable enough for the grid sizes used here.
  long double s = std::accumulate(values.begin(), values.end(), 0.0L);
  return static_cast<double>(s / static_cast<long double>(values.size()));
}

}  // namespace shearfront
