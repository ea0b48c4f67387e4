#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace mpemba {

using cplx = std::complex<double>;
using Matrix4 = Eigen::Matrix4cd;
using Vector4 = Eigen::Vector4cd;

inline constexpr cplx I{0.0, 1.0};

/// Raised for arguments outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Raised when a closed form is requested at a point where it does not apply.
struct WrongRegionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a logarithm of a vanishing density-matrix eigenvalue would be needed.
struct DegenerateStateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when an internal numerical consistency check fails.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dimensionless drive and dissipation; the detuning is the unit of energy.
struct ControlParams {
  double d_tilde = 0.0;
  double gamma_tilde = 0.0;

  void validate() const {
    if (!std::isfinite(d_tilde) || !std::isfinite(gamma_tilde))
      throw DomainError("control parameters must be finite");
    if (gamma_tilde < 0.0) throw DomainError("gamma_tilde must be non-negative");
  }

  bool operator==(const ControlParams&) const = default;
};

struct CoherenceParts {
  double rho_re = 0.0;
  double rho_im = 0.0;
};

/// Vectorized 2x2 density matrix in the order (eg, ge, ee, gg).
struct DensityVector {
  cplx rho_eg{};
  cplx rho_ge{};
  cplx rho_ee{};
  cplx rho_gg{};

  static DensityVector from_vector(const Vector4& v) { return {v(0), v(1), v(2), v(3)}; }

  static DensityVector from_parts(CoherenceParts c, double ee, double gg) {
    return {cplx(c.rho_re, c.rho_im), cplx(c.rho_re, -c.rho_im), cplx(ee, 0.0), cplx(gg, 0.0)};
  }

  Vector4 as_vector() const {
    Vector4 v;
    v << rho_eg, rho_ge, rho_ee, rho_gg;
    return v;
  }

  CoherenceParts coherence() const { return {rho_eg.real(), rho_eg.imag()}; }

  /// Matrix [[ee, eg], [ge, gg]] in the basis (e, g).
  Eigen::Matrix2cd as_matrix() const {
    Eigen::Matrix2cd m;
    m << rho_ee, rho_eg, rho_ge, rho_gg;
    return m;
  }

  /// Bloch vector (2 Re eg, -2 Im eg, ee - gg) of the Hermitian part.
  Eigen::Vector3d bloch() const {
    const cplx c = 0.5 * (rho_eg + std::conj(rho_ge));
    return {2.0 * c.real(), -2.0 * c.imag(), rho_ee.real() - rho_gg.real()};
  }

  bool is_physical(double tol = 1e-10) const {
    if (std::abs(rho_ge - std::conj(rho_eg)) > tol) return false;
    if (std::abs(rho_ee.imag()) > tol || std::abs(rho_gg.imag()) > tol) return false;
    if (std::abs(rho_ee.real() + rho_gg.real() - 1.0) > tol) return false;
    return rho_ee.real() * rho_gg.real() - std::norm(rho_eg) >= -tol;
  }
};

/// Pre-quench parameters of the two copies and the shared post-quench point.
struct QuenchExperiment {
  ControlParams pre_I;
  ControlParams pre_II;
  ControlParams post;

  void validate() const {
    pre_I.validate();
    pre_II.validate();
    post.validate();
  }
};

/// The Lindbladian acting as i d/dt rho = L rho.
inline Matrix4 build_lindbladian(const ControlParams& p) {
  p.validate();
  const double d = p.d_tilde;
  const double g = p.gamma_tilde;
  const double h = 0.5 * d;
  Matrix4 L;
  L << cplx(1.0, -0.5 * g), 0.0, -h, h,
       0.0, cplx(-1.0, -0.5 * g), h, -h,
       -h, h, cplx(0.0, -g), 0.0,
       h, -h, cplx(0.0, g), 0.0;
  return L;
}

inline DensityVector steady_state(const ControlParams& p) {
  p.validate();
  const double d = p.d_tilde;
  const double g = p.gamma_tilde;
  const double D = 4.0 + 2.0 * d * d + g * g;
  const CoherenceParts c{-2.0 * d / D, -d * g / D};
  return DensityVector::from_parts(c, d * d / D, (4.0 + d * d + g * g) / D);
}

inline DensityVector initial_condition(const ControlParams& pre) { return steady_state(pre); }

/// Time derivative -i L rho.
inline DensityVector time_derivative(const DensityVector& rho, const ControlParams& p) {
  return DensityVector::from_vector(-I * (build_lindbladian(p) * rho.as_vector()));
}

}  // namespace mpemba
