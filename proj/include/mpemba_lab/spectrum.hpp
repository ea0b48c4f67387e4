#pragma once

#include "lindblad_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

namespace mpemba {

enum class Region { A1, A2, B, C, D, E };

inline std::string to_string(Region r) {
  switch (r) {
    case Region::A1: return "A1";
    case Region::A2: return "A2";
    case Region::B: return "B";
    case Region::C: return "C";
    case Region::D: return "D";
    case Region::E: return "E";
  }
  return "?";
}

inline constexpr double kDefaultEpTol = 1e-9;

/// Depressed form x^3 + P x + Q of the cubic factor, with lambda = x + shift.
struct DepressedCubic {
  double shift = 0.0;
  double P = 0.0;
  double Q = 0.0;

  /// (4P^3 + 27Q^2) / (4|P|^3 + 27Q^2); zero exactly at a repeated root.
  double normalized_discriminant() const {
    const double num = 4.0 * P * P * P + 27.0 * Q * Q;
    const double den = 4.0 * std::abs(P * P * P) + 27.0 * Q * Q;
    return den == 0.0 ? 0.0 : num / den;
  }
};

inline DepressedCubic depressed_cubic(const ControlParams& p) {
  const double d2 = p.d_tilde * p.d_tilde;
  const double g = p.gamma_tilde;
  return {2.0 * g / 3.0, 1.0 + d2 - g * g / 12.0, -(g / 3.0) * (1.0 - d2 / 2.0 + g * g / 36.0)};
}

/// Characteristic cubic of the nonzero lambdas, monic in lambda.
inline cplx characteristic_cubic(const ControlParams& p, cplx lam) {
  const double d2 = p.d_tilde * p.d_tilde;
  const double g = p.gamma_tilde;
  const double c1 = 1.0 + 1.25 * g * g + d2;
  const double c0 = -g * (1.0 + 0.25 * g * g + 0.5 * d2);
  return ((lam - 2.0 * g) * lam + c1) * lam + c0;
}

namespace detail {

inline cplx characteristic_cubic_derivative(const ControlParams& p, cplx lam) {
  const double d2 = p.d_tilde * p.d_tilde;
  const double g = p.gamma_tilde;
  return (3.0 * lam - 4.0 * g) * lam + 1.0 + 1.25 * g * g + d2;
}

inline cplx polish_root(const ControlParams& p, cplx lam) {
  for (int it = 0; it < 4; ++it) {
    const cplx f = characteristic_cubic(p, lam);
    const cplx fp = characteristic_cubic_derivative(p, lam);
    if (f == 0.0 || fp == 0.0) break;
    const cplx next = lam - f / fp;
    if (std::abs(characteristic_cubic(p, next)) >= std::abs(f)) break;
    lam = next;
  }
  return lam;
}

}  // namespace detail

/// Cubic roots with the region they imply.
struct EigenvalueStructure {
  std::array<cplx, 3> lambda{};
  Region region = Region::B;
  bool a1_a2_tie = false;
  double discriminant = 0.0;
};

/// Roots of the cubic factor and the region tag.
///
/// Ordering: real spectra ascending; with a complex pair the real root comes
/// first, followed by lambda_re + i lambda_im (lambda_im > 0) and its conjugate.
/// Degeneracies are detected from the normalized discriminant, which is
/// compared against ep_tol.
inline EigenvalueStructure eigenvalue_structure(const ControlParams& p, double ep_tol = kDefaultEpTol) {
  p.validate();
  if (!(ep_tol > 0.0)) throw DomainError("ep_tol must be positive");
  const DepressedCubic c = depressed_cubic(p);
  EigenvalueStructure out;
  out.discriminant = c.normalized_discriminant();

  const double sigma = std::max({std::abs(c.shift), std::sqrt(std::abs(c.P)), std::cbrt(std::abs(c.Q)), 1e-300});
  if (std::abs(c.P) <= ep_tol * sigma * sigma && std::abs(c.Q) <= ep_tol * sigma * sigma * sigma) {
    out.lambda = {c.shift, c.shift, c.shift};
    out.region = Region::E;
    return out;
  }

  if (std::abs(out.discriminant) <= ep_tol) {
    const double s = std::cbrt(-0.5 * c.Q);
    const double simple = c.shift + 2.0 * s;
    const double twice = c.shift - s;
    if (s > 0.0) {
      out.lambda = {twice, twice, simple};
      out.region = Region::D;
    } else {
      out.lambda = {simple, twice, twice};
      out.region = Region::C;
    }
    return out;
  }

  if (out.discriminant > 0.0) {
    const double h = -0.5 * c.Q;
    const double root = std::sqrt(h * h + c.P * c.P * c.P / 27.0);
    const double A = std::cbrt(h >= 0.0 ? h + root : h - root);
    const double B = A == 0.0 ? 0.0 : -c.P / (3.0 * A);
    const double x = A + B;
    const cplx real_root = detail::polish_root(p, c.shift + x);
    cplx pair = detail::polish_root(p, cplx(c.shift - 0.5 * x, 0.5 * std::sqrt(3.0) * std::abs(A - B)));
    if (pair.imag() < 0.0) pair = std::conj(pair);
    const double lr = real_root.real();
    out.lambda = {lr, pair, std::conj(pair)};
    const double gap = pair.real() - lr;
    out.a1_a2_tie = std::abs(gap) <= ep_tol * std::max(std::abs(lr), 1.0);
    out.region = (gap > 0.0 && !out.a1_a2_tie) ? Region::A1 : Region::A2;
    return out;
  }

  const double m = 2.0 * std::sqrt(-c.P / 3.0);
  const double arg = std::clamp(3.0 * c.Q / (c.P * m), -1.0, 1.0);
  const double phi = std::acos(arg) / 3.0;
  std::array<double, 3> x{};
  for (int k = 0; k < 3; ++k) x[k] = c.shift + m * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0);
  std::sort(x.begin(), x.end());
  for (int k = 0; k < 3; ++k) out.lambda[k] = detail::polish_root(p, x[k]).real();
  out.region = Region::B;
  return out;
}

inline std::array<cplx, 3> nonzero_eigenvalues(const ControlParams& p, double ep_tol = kDefaultEpTol) {
  return eigenvalue_structure(p, ep_tol).lambda;
}

inline Region classify_region(const ControlParams& p, double ep_tol = kDefaultEpTol) {
  return eigenvalue_structure(p, ep_tol).region;
}

/// Dissipation on the line of second-order points with the smaller pair degenerate.
inline double region_d_gamma(double d_tilde) {
  const double d2 = d_tilde * d_tilde;
  if (!(d2 >= 8.0)) throw DomainError("region_d_gamma requires d_tilde^2 >= 8");
  return std::sqrt(d2 * d2 / 2.0 + 10.0 * d2 - 4.0 + 0.5 * std::abs(d_tilde) * std::pow(d2 - 8.0, 1.5));
}

/// Dissipation on the line of second-order points with the larger pair degenerate.
inline double region_c_gamma(double d_tilde) {
  const double d2 = d_tilde * d_tilde;
  if (!(d2 >= 8.0)) throw DomainError("region_c_gamma requires d_tilde^2 >= 8");
  return std::sqrt(d2 * d2 / 2.0 + 10.0 * d2 - 4.0 - 0.5 * std::abs(d_tilde) * std::pow(d2 - 8.0, 1.5));
}

/// Dissipation on which the three relaxation rates are equally spaced.
inline double region_b_m2_gamma(double d_tilde) {
  const double d2 = d_tilde * d_tilde;
  if (!(d2 >= 2.0)) throw DomainError("region_b_m2_gamma requires d_tilde^2 >= 2");
  return 3.0 * std::sqrt(2.0) * std::sqrt(d2 - 2.0);
}

/// The third-order exceptional point.
inline ControlParams e_point() { return {2.0 * std::numbers::sqrt2, 6.0 * std::numbers::sqrt3}; }

struct SpectralData {
  ControlParams params;
  Region region = Region::B;
  bool a1_a2_tie = false;
  double discriminant = 0.0;
  std::array<cplx, 4> lambdas{};
  Matrix4 right = Matrix4::Zero();   // columns r_k (generalized at EPs)
  Matrix4 left = Matrix4::Zero();    // rows l_k
  Matrix4 jordan = Matrix4::Zero();  // L R = R J

  /// Smallest nonzero real part among the lambdas.
  double lambda_slow() const {
    double m = lambdas[1].real();
    for (int k = 2; k < 4; ++k) m = std::min(m, lambdas[k].real());
    return m;
  }

  double jordan_residual() const {
    return (build_lindbladian(params) * right - right * jordan).cwiseAbs().maxCoeff();
  }
};

namespace detail {

/// Right eigenvector of the mode with eigenvalue lambda, last component 1.
inline Vector4 right_vector(const ControlParams& p, cplx lam) {
  const cplx u = 0.5 * p.gamma_tilde - lam;
  const double d = p.d_tilde;
  Vector4 r;
  r << -d / (1.0 - I * u), -d / (1.0 + I * u), -1.0, 1.0;
  return r;
}

/// First Jordan-chain vector i dr/dlambda.
inline Vector4 chain_vector_1(const ControlParams& p, cplx lam) {
  const cplx u = 0.5 * p.gamma_tilde - lam;
  const double d = p.d_tilde;
  Vector4 r;
  r << -d / ((1.0 - I * u) * (1.0 - I * u)), d / ((1.0 + I * u) * (1.0 + I * u)), 0.0, 0.0;
  return r;
}

/// Second Jordan-chain vector -(1/2) d^2r/dlambda^2.
inline Vector4 chain_vector_2(const ControlParams& p, cplx lam) {
  const cplx u = 0.5 * p.gamma_tilde - lam;
  const double d = p.d_tilde;
  const cplx a = 1.0 - I * u;
  const cplx b = 1.0 + I * u;
  Vector4 r;
  r << -d / (a * a * a), -d / (b * b * b), 0.0, 0.0;
  return r;
}

inline Vector4 steady_right_vector(const ControlParams& p) {
  const double d = p.d_tilde;
  const double g = p.gamma_tilde;
  const double N = 4.0 + d * d + g * g;
  Vector4 r;
  r << -d * cplx(2.0, g) / N, -d * cplx(2.0, -g) / N, d * d / N, 1.0;
  return r;
}

/// Closed-form left eigenvector of a nondegenerate mode k (1..3 indexes lambda).
inline Eigen::RowVector4cd left_vector(const ControlParams& p, const std::array<cplx, 4>& lam, int k) {
  const double d = p.d_tilde;
  const double g = p.gamma_tilde;
  const double D = 4.0 + 2.0 * d * d + g * g;
  cplx prod_gap = 1.0, prod_lam = 1.0, prod_g = 1.0, sum_lam = 0.0;
  for (int n = 1; n < 4; ++n) {
    if (n == k) continue;
    prod_gap *= lam[k] - lam[n];
    prod_lam *= lam[n];
    prod_g *= g - 2.0 * lam[n];
    sum_lam += lam[n];
  }
  const cplx pre = 4.0 + (g - 2.0 * lam[k]) * (g - 2.0 * lam[k]);
  const cplx re = -pre * (-4.0 + prod_g) / (32.0 * d * prod_gap);
  const cplx im = -pre * (g - sum_lam) / (8.0 * d * prod_gap);
  Eigen::RowVector4cd l;
  l << re + I * im, re - I * im, -pre * (D + 4.0 * prod_lam) / (8.0 * D * prod_gap),
      pre * (D - 4.0 * prod_lam) / (8.0 * D * prod_gap);
  return l;
}

/// Right vector from the numerical null space, used where the closed form loses precision.
inline Vector4 null_vector(const Matrix4& iL, cplx lam) {
  Eigen::JacobiSVD<Matrix4> svd(iL - lam * Matrix4::Identity(), Eigen::ComputeFullV);
  Vector4 v = svd.matrixV().col(3);
  Eigen::Index big = 0;
  v.cwiseAbs().maxCoeff(&big);
  const Eigen::Index pivot = std::abs(v(3)) > 1e-3 * v.norm() ? 3 : big;
  return v / v(pivot);
}

}  // namespace detail

/// Eigenvalues, (generalized) eigenvectors and Jordan form at p.
inline SpectralData eigensystem(const ControlParams& p, double ep_tol = kDefaultEpTol) {
  const EigenvalueStructure es = eigenvalue_structure(p, ep_tol);
  SpectralData s;
  s.params = p;
  s.region = es.region;
  s.a1_a2_tie = es.a1_a2_tie;
  s.discriminant = es.discriminant;
  s.lambdas = {0.0, es.lambda[0], es.lambda[1], es.lambda[2]};
  for (int k = 0; k < 4; ++k) s.jordan(k, k) = -I * s.lambdas[k];
  s.right.col(0) = detail::steady_right_vector(p);

  switch (s.region) {
    case Region::A1:
    case Region::A2:
    case Region::B: {
      bool closed = p.d_tilde != 0.0;
      for (int k = 1; k < 4 && closed; ++k) {
        const cplx u = 0.5 * p.gamma_tilde - s.lambdas[k];
        closed = std::abs(1.0 + u * u) > 1e-6;
      }
      if (p.d_tilde == 0.0) {
        s.right.col(1) << 0.0, 0.0, -1.0, 1.0;
        s.right.col(2) << 1.0, 0.0, 0.0, 0.0;
        s.right.col(3) << 0.0, 1.0, 0.0, 0.0;
        s.left = s.right.inverse();
      } else if (closed) {
        for (int k = 1; k < 4; ++k) s.right.col(k) = detail::right_vector(p, s.lambdas[k]);
        const double N = 4.0 + p.d_tilde * p.d_tilde + p.gamma_tilde * p.gamma_tilde;
        const double D = N + p.d_tilde * p.d_tilde;
        s.left.row(0) << 0.0, 0.0, N / D, N / D;
        for (int k = 1; k < 4; ++k) s.left.row(k) = detail::left_vector(p, s.lambdas, k);
      } else {
        const Matrix4 iL = I * build_lindbladian(p);
        for (int k = 1; k < 4; ++k) s.right.col(k) = detail::null_vector(iL, s.lambdas[k]);
        s.left = s.right.inverse();
      }
      break;
    }
    case Region::D:
      s.right.col(1) = detail::right_vector(p, s.lambdas[1]);
      s.right.col(2) = detail::chain_vector_1(p, s.lambdas[1]);
      s.right.col(3) = detail::right_vector(p, s.lambdas[3]);
      s.jordan(1, 2) = 1.0;
      s.left = s.right.inverse();
      break;
    case Region::C:
      s.right.col(1) = detail::right_vector(p, s.lambdas[1]);
      s.right.col(2) = detail::right_vector(p, s.lambdas[2]);
      s.right.col(3) = detail::chain_vector_1(p, s.lambdas[2]);
      s.jordan(2, 3) = 1.0;
      s.left = s.right.inverse();
      break;
    case Region::E:
      s.right.col(1) = detail::right_vector(p, s.lambdas[1]);
      s.right.col(2) = detail::chain_vector_1(p, s.lambdas[1]);
      s.right.col(3) = detail::chain_vector_2(p, s.lambdas[1]);
      s.jordan(1, 2) = 1.0;
      s.jordan(2, 3) = 1.0;
      s.left = s.right.inverse();
      break;
  }

  const double residual = s.jordan_residual();
  if (!(residual <= 1e-8))
    throw NumericalError("eigensystem: Jordan residual " + std::to_string(residual) + " exceeds 1e-8");
  return s;
}

}  // namespace mpemba
