#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace shearfront {

/// Uniform grid on the unit-period torus T^dim, dim in {1, 2}.
/// Nodes are y_j = j / points_per_dim; multi-indices are flattened with the
/// first coordinate varying slowest.
class TorusGrid {
 public:
  TorusGrid(int dim, int points_per_dim);

  int dim() const noexcept { return dim_; }
  int points_per_dim() const noexcept { return n_; }
  double spacing() const noexcept { return 1.0 / n_; }
  std::size_t size() const noexcept { return size_; }

  /// Periodic wrap of a 1-D index into [0, n).
  int wrap(int j) const noexcept {
    const int r = j % n_;
    return r < 0 ? r + n_ : r;
  }

  std::array<int, 2> multi_index(std::size_t flat) const noexcept;
  std::size_t flat_index(int j0, int j1 = 0) const noexcept;

  /// Coordinate of node `flat` along direction `d`.
  double coordinate(std::size_t flat, int d) const noexcept;

  /// Flat indices of the 2*dim nearest periodic neighbours of `flat`
  /// (order: -e0, +e0, -e1, +e1).
  std::array<std::size_t, 4> neighbours(std::size_t flat) const noexcept;

  /// Grid with the spacing halved `times` times.
  TorusGrid refined(int times) const;

  friend bool operator==(const TorusGrid&, const TorusGrid&) = default;

 private:
  int dim_;
  int n_;
  std::size_t size_;
};

/// Truncated cylinder [x_min, x_max] x T^dim with a uniform x-grid that
/// contains x = 0 as a node. Fields on it are stored x-major:
/// value(i, j) = data[i * torus.size() + j].
class CylinderGrid {
 public:
  CylinderGrid(TorusGrid torus, double x_min, double x_max, int n_x);

  /// Grid of spacing `dx` with `n_left` nodes left of 0 and `n_right` to the right.
  static CylinderGrid from_spacing(TorusGrid torus, double dx, int n_left, int n_right);

  const TorusGrid& torus() const noexcept { return torus_; }
  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  int n_x() const noexcept { return n_x_; }
  double dx() const noexcept { return dx_; }
  int zero_index() const noexcept { return zero_index_; }
  double x(int i) const noexcept { return x_min_ + dx_ * i; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_x_) * torus_.size(); }
  std::size_t at(int i, std::size_t j) const noexcept { return static_cast<std::size_t>(i) * torus_.size() + j; }

  /// Halves both the x and the torus spacing `times` times.
  CylinderGrid refined(int times) const;

 private:
  TorusGrid torus_;
  double x_min_;
  double x_max_;
  int n_x_;
  double dx_;
  int zero_index_;
};

using Field = std::vector<double>;

/// Grid average of a torus field (equal weights).
double torus_mean(const Field& values);

}  // namespace shearfront
