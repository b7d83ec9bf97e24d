#pragma once

#include <complex>
#include <vector>

#include "shearfront/grid.hpp"

namespace shearfront {

/// Discrete Fourier coefficients of a real torus field, normalised so that
/// f(y) = sum_k c_k exp(2 pi i k.y) at the grid nodes.
struct FourierCoefficients {
  TorusGrid grid;
  std::vector<std::complex<double>> c;  // same flat layout as the field

  /// Signed wave number of flat index `flat` along direction `d`.
  int wave_number(std::size_t flat, int d) const noexcept;
};

FourierCoefficients fourier_transform(const TorusGrid& grid, const Field& values);
Field inverse_fourier_transform(const FourierCoefficients& coeffs);

/// Spectral partial derivative D^order of a torus field. `order` holds one
/// non-negative entry per torus direction. Odd-order derivatives drop the
/// Nyquist mode.
Field spectral_derivative(const TorusGrid& grid, const Field& values, std::array<int, 2> order);

}  // namespace shearfront
