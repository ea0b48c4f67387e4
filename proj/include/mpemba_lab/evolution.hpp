#pragma once

#include "lindblad_core.hpp"
#include "spectrum.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace mpemba {

/// a_k = sum_n l_{k,n} rho_n(0).
struct ModeCoefficients {
  std::array<cplx, 4> a{};
  Region region = Region::B;
  // Split of the oscillating pair in A1/A2: a_3 = a_re + i a_im, a_4 = a_re - i a_im.
  double a_re = 0.0;
  double a_im = 0.0;
  double phase = 0.0;
};

inline ModeCoefficients mode_coefficients(const DensityVector& rho0, const SpectralData& spec) {
  const Vector4 a = spec.left * rho0.as_vector();
  ModeCoefficients m;
  m.region = spec.region;
  for (int k = 0; k < 4; ++k) m.a[k] = a(k);
  if (spec.region == Region::A1 || spec.region == Region::A2) {
    const cplx re = 0.5 * (m.a[2] + m.a[3]);
    const cplx im = (m.a[2] - m.a[3]) / (2.0 * I);
    m.a_re = re.real();
    m.a_im = im.real();
    m.phase = std::atan2(m.a_im, m.a_re);
  }
  return m;
}

/// Mode sum R exp(-iJt) a; at exceptional points the Jordan defects add the
/// polynomial-in-t terms.
inline Vector4 propagate_modes(const SpectralData& spec, const std::array<cplx, 4>& a, double t) {
  if (t < 0.0) throw DomainError("propagation time must be non-negative");
  Vector4 av;
  av << a[0], a[1], a[2], a[3];
  Matrix4 N = spec.jordan;
  N.diagonal().setZero();
  const Matrix4 Nt = (-I * t) * N;
  Vector4 b = av + Nt * av + 0.5 * (Nt * (Nt * av));
  for (int k = 0; k < 4; ++k) b(k) *= std::exp(-spec.lambdas[k] * t);
  return spec.right * b;
}

inline DensityVector propagate_analytic(const SpectralData& spec, const ModeCoefficients& m, double t) {
  return DensityVector::from_vector(propagate_modes(spec, m.a, t));
}

inline DensityVector propagate_analytic(const DensityVector& rho0, const ControlParams& post, double t) {
  if (t < 0.0) throw DomainError("propagation time must be non-negative");
  const SpectralData spec = eigensystem(post);
  return propagate_analytic(spec, mode_coefficients(rho0, spec), t);
}

inline constexpr double kDefaultRk4Step = 1e-4;

/// Classical fourth-order Runge-Kutta for d rho/dt = -i L rho; the step is
/// shrunk so that an integer number of steps lands on t.
inline DensityVector propagate_rk4(const DensityVector& rho0, const ControlParams& post, double t,
                                   double dt = kDefaultRk4Step) {
  if (t < 0.0) throw DomainError("propagation time must be non-negative");
  if (!(dt > 0.0)) throw DomainError("rk4 step must be positive");
  if (t == 0.0) return rho0;
  const Matrix4 M = -I * build_lindbladian(post);
  const auto steps = static_cast<long>(std::ceil(t / dt - 1e-9));
  const double h = t / static_cast<double>(std::max(steps, 1L));
  Vector4 x = rho0.as_vector();
  for (long s = 0; s < std::max(steps, 1L); ++s) {
    const Vector4 k1 = M * x;
    const Vector4 k2 = M * (x + 0.5 * h * k1);
    const Vector4 k3 = M * (x + 0.5 * h * k2);
    const Vector4 k4 = M * (x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return DensityVector::from_vector(x);
}

/// 20 / lambda_slow.
inline double default_horizon(const SpectralData& spec) {
  const double slow = spec.lambda_slow();
  if (!(slow > 0.0)) throw DomainError("no relaxation at these parameters (lambda_slow = 0)");
  return 20.0 / slow;
}

inline constexpr int kDefaultGridPoints = 2000;

enum class Provenance { Analytic, Rk4 };

inline std::string to_string(Provenance p) { return p == Provenance::Analytic ? "analytic" : "rk4"; }

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityVector> states;
  Provenance provenance = Provenance::Analytic;
};

inline std::vector<double> uniform_grid(double horizon, int n) {
  if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
  if (n < 2) throw DomainError("grid needs at least 2 points");
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = horizon * i / (n - 1);
  return t;
}

inline Trajectory make_trajectory(const DensityVector& rho0, const ControlParams& post, double horizon,
                                  int n = kDefaultGridPoints, Provenance how = Provenance::Analytic,
                                  double dt = kDefaultRk4Step) {
  Trajectory tr;
  tr.provenance = how;
  tr.times = uniform_grid(horizon, n);
  tr.states.reserve(tr.times.size());
  if (how == Provenance::Analytic) {
    const SpectralData spec = eigensystem(post);
    const ModeCoefficients m = mode_coefficients(rho0, spec);
    for (double t : tr.times) tr.states.push_back(propagate_analytic(spec, m, t));
  } else {
    DensityVector x = rho0;
    tr.states.push_back(x);
    for (std::size_t i = 1; i < tr.times.size(); ++i) {
      x = propagate_rk4(x, post, tr.times[i] - tr.times[i - 1], dt);
      tr.states.push_back(x);
    }
  }
  return tr;
}

}  // namespace mpemba
