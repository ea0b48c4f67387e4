#pragma once

#include "mpemba_lab/mpemba.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <random>

namespace mpemba::testing {

/// Gamma of the region-D post-quench point at d = 4 used by the region-D examples.
inline double d_line_gamma_4() { return std::sqrt(284.0 + 32.0 * std::numbers::sqrt2); }

/// Reference propagation exp(-i L t) rho by Eigen's matrix exponential.
inline DensityVector expm_propagate(const DensityVector& rho0, const ControlParams& p, double t) {
  const Matrix4 gen = (-I * t) * build_lindbladian(p);
  const Matrix4 u = gen.exp();
  return DensityVector::from_vector(u * rho0.as_vector());
}

/// Uniformly distributed state in the Bloch ball.
inline DensityVector random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = std::cbrt(unit(rng));
  const double th = std::acos(2.0 * unit(rng) - 1.0);
  const double ph = 2.0 * std::numbers::pi * unit(rng);
  const double x = r * std::sin(th) * std::cos(ph);
  const double y = r * std::sin(th) * std::sin(ph);
  const double z = r * std::cos(th);
  return DensityVector::from_parts({0.5 * x, -0.5 * y}, 0.5 * (1.0 + z), 0.5 * (1.0 - z));
}

inline double max_abs(const Vector4& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace mpemba::testing
