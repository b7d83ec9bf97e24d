#include "shearfront/fourier.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

#include "shearfront/error.hpp"

namespace shearfront {

namespace {

using cplx = std::complex<double>;

// In-place 1-D transforms along each torus direction.
void transform_lines(const TorusGrid& grid, std::vector<cplx>& data, bool inverse) {
  Eigen::FFT<double> fft;
  const int n = grid.points_per_dim();
  std::vector<cplx> in(n), out(n);
  auto run = [&](auto index_of, int lines) {
    for (int l = 0; l < lines; ++l) {
      for (int k = 0; k < n; ++k) in[k] = data[index_of(l, k)];
      if (inverse) {
        fft.inv(out, in);
      } else {
        fft.fwd(out, in);
      }
      for (int k = 0; k < n; ++k) data[index_of(l, k)] = out[k];
    }
  };
  if (grid.dim() == 1) {
    run([](int, int k) { return static_cast<std::size_t>(k); }, 1);
    return;
  }
  run([n](int l, int k) { return static_cast<std::size_t>(l) * n + k; }, n);
  run([n](int l, int k) { return static_cast<std::size_t>(k) * n + l; }, n);
}

}  // namespace

int FourierCoefficients::wave_number(std::size_t flat, int d) const noexcept {
  const int n = grid.points_per_dim();
  const int j = grid.multi_index(flat)[d];
  return j <= n / 2 - (n % 2 == 0 ? 1 : 0) ? j : j - n;
}

FourierCoefficients fourier_transform(const TorusGrid& grid, const Field& values) {
  if (values.size() != grid.size()) throw InputError("fourier_transform: size mismatch");
  std::vector<cplx> data(values.begin(), values.end());
  transform_lines(grid, data, false);
  const double scale = 1.0 / static_cast<double>(grid.size());
  for (auto& v : data) v *= scale;
  return {grid, std::move(data)};
}

Field inverse_fourier_transform(const FourierCoefficients& coeffs) {
  std::vector<cplx> data = coeffs.c;
  transform_lines(coeffs.grid, data, true);
  // Eigen's inverse already divides by n per direction.
  const double scale = static_cast<double>(coeffs.grid.size());
  Field out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i].real() * scale;
  return out;
}

Field spectral_derivative(const TorusGrid& grid, const Field& values, std::array<int, 2> order) {
  auto coeffs = fourier_transform(grid, values);
  const int n = grid.points_per_dim();
  const bool even = n % 2 == 0;
  for (std::size_t f = 0; f < coeffs.c.size(); ++f) {
    cplx factor = 1.0;
    for (int d = 0; d < grid.dim(); ++d) {
      if (order[d] == 0) continue;
      const int j = grid.multi_index(f)[d];
      if (even && j == n / 2 && order[d] % 2 == 1) {
        factor = 0.0;
        break;
      }
      const int k = coeffs.wave_number(f, d);
      factor *= std::pow(cplx(0.0, 2.0 * std::numbers::pi * k), order[d]);
    }
    coeffs.c[f] *= factor;
  }
  return inverse_fourier_transform(coeffs);
}

}  // namespace shearfront
