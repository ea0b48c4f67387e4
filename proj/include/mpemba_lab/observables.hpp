#pragma once

#include "lindblad_core.hpp"

#include <boost/math/special_functions/log1p.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

namespace mpemba {

enum class ObservableKind { GroundPop, Energy, Entropy, Temperature, KLDivergence, KLSpeed };

inline std::string to_string(ObservableKind k) {
  switch (k) {
    case ObservableKind::GroundPop: return "rho_gg";
    case ObservableKind::Energy: return "energy";
    case ObservableKind::Entropy: return "entropy";
    case ObservableKind::Temperature: return "temperature";
    case ObservableKind::KLDivergence: return "kl";
    case ObservableKind::KLSpeed: return "kl_speed";
  }
  return "?";
}

inline std::optional<ObservableKind> parse_observable(std::string_view s) {
  for (auto k : {ObservableKind::GroundPop, ObservableKind::Energy, ObservableKind::Entropy,
                 ObservableKind::Temperature, ObservableKind::KLDivergence, ObservableKind::KLSpeed})
    if (s == to_string(k)) return k;
  if (s == "gg" || s == "ground") return ObservableKind::GroundPop;
  return std::nullopt;
}

inline constexpr double kEigenFloor = 1e-14;

namespace detail {

/// Length of the Bloch vector, rejecting states outside the unit ball.
inline double bloch_length(const DensityVector& rho) {
  const double r = rho.bloch().norm();
  if (0.5 * (1.0 - r) < -1e-10) throw DomainError("density matrix has a negative eigenvalue");
  return std::min(r, 1.0);
}

/// artanh(r) / r with the r -> 0 limit.
inline double artanh_over(double r) { return r < 1e-8 ? 1.0 + r * r / 3.0 : std::atanh(r) / r; }

}  // namespace detail

/// Tr[rho H] with H = [[1, d/2], [d/2, 0]].
inline double energy(const DensityVector& rho, const ControlParams& p) {
  return 1.0 - rho.rho_gg.real() + p.d_tilde * rho.rho_eg.real();
}

/// von Neumann entropy in nats.
inline double entropy(const DensityVector& rho) {
  const double r = detail::bloch_length(rho);
  const double hi = 0.5 * (1.0 + r);
  const double lo = 0.5 * (1.0 - r);
  double s = 0.0;
  if (hi > 0.0) s -= hi * std::log(hi);
  if (lo > 0.0) s -= lo * std::log(lo);
  return s;
}

inline double energy_rate(const DensityVector& rho, const ControlParams& p) {
  const DensityVector dr = time_derivative(rho, p);
  return -dr.rho_gg.real() + p.d_tilde * dr.rho_eg.real();
}

inline double entropy_rate(const DensityVector& rho, const ControlParams& p) {
  const double r = detail::bloch_length(rho);
  if (0.5 * (1.0 - r) < kEigenFloor) throw DegenerateStateError("entropy rate at a (nearly) pure state");
  const Eigen::Vector3d rv = rho.bloch();
  const Eigen::Vector3d rdot = time_derivative(rho, p).bloch();
  return -detail::artanh_over(r) * rv.dot(rdot);
}

inline double observable_rate(const DensityVector& rho, const ControlParams& p, ObservableKind kind) {
  switch (kind) {
    case ObservableKind::Energy: return energy_rate(rho, p);
    case ObservableKind::Entropy: return entropy_rate(rho, p);
    default: throw DomainError("observable_rate supports energy and entropy only");
  }
}

/// dE/dS, or nullopt where the entropy rate vanishes or cannot be formed.
inline std::optional<double> temperature(const DensityVector& rho, const ControlParams& p) {
  const double de = energy_rate(rho, p);
  double ds = 0.0;
  try {
    ds = entropy_rate(rho, p);
  } catch (const DegenerateStateError&) {
    return std::nullopt;
  }
  if (std::abs(ds) < 1e-12 * std::max(1.0, std::abs(de))) return std::nullopt;
  return de / ds;
}

/// Quantum relative entropy Tr[rho (ln rho - ln rho_ss)] written in Bloch form;
/// +inf when rho_ss is rank deficient.
inline double kl_divergence(const DensityVector& rho, const DensityVector& rho_ss) {
  const double r = detail::bloch_length(rho);
  const double s = detail::bloch_length(rho_ss);
  if (0.5 * (1.0 - s) < kEigenFloor) return std::numeric_limits<double>::infinity();
  const double eps = r - s;
  double kl = eps * eps / ((1.0 + s) * (1.0 - s)) + 0.5 * (1.0 + r) * boost::math::log1pmx(eps / (1.0 + s));
  if (r < 1.0) kl += 0.5 * (1.0 - r) * boost::math::log1pmx(-eps / (1.0 - s));
  if (s > 0.0) {
    const Eigen::Vector3d rv = rho.bloch();
    const Eigen::Vector3d sh = rho_ss.bloch() / s;
    const double proj = rv.dot(sh);
    const double perp = proj > 0.0 ? rv.cross(sh).squaredNorm() / (r + proj) : r - proj;
    kl += std::atanh(s) * perp;
  }
  return std::max(kl, 0.0);
}

/// -d/dt of the relative entropy along the flow of p.
inline double kl_speed(const DensityVector& rho, const ControlParams& p, const DensityVector& rho_ss) {
  const double r = detail::bloch_length(rho);
  const double s = detail::bloch_length(rho_ss);
  if (0.5 * (1.0 - r) < kEigenFloor) throw DegenerateStateError("kl_speed at a (nearly) pure state");
  if (0.5 * (1.0 - s) < kEigenFloor) throw DegenerateStateError("kl_speed with a rank-deficient reference");
  const Eigen::Vector3d rv = rho.bloch();
  const Eigen::Vector3d sv = rho_ss.bloch();
  const Eigen::Vector3d grad = detail::artanh_over(r) * rv - detail::artanh_over(s) * sv;
  return -time_derivative(rho, p).bloch().dot(grad);
}

/// Observable value, nullopt where it is undefined (temperature sentinel,
/// infinite relative entropy, degenerate state for the speed).
inline std::optional<double> observable_value(ObservableKind kind, const DensityVector& rho, const ControlParams& post,
                                              const DensityVector& rho_ss) {
  switch (kind) {
    case ObservableKind::GroundPop: return rho.rho_gg.real();
    case ObservableKind::Energy: return energy(rho, post);
    case ObservableKind::Entropy: return entropy(rho);
    case ObservableKind::Temperature: return temperature(rho, post);
    case ObservableKind::KLDivergence: {
      const double v = kl_divergence(rho, rho_ss);
      if (std::isinf(v)) return std::nullopt;
      return v;
    }
    case ObservableKind::KLSpeed:
      try {
        return kl_speed(rho, post, rho_ss);
      } catch (const DegenerateStateError&) {
        return std::nullopt;
      }
  }
  return std::nullopt;
}

}  // namespace mpemba
