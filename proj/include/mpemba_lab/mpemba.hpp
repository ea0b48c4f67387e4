#pragma once

#include "evolution.hpp"
#include "lambertw.hpp"
#include "lindblad_core.hpp"
#include "observables.hpp"
#include "spectrum.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace mpemba {

enum class Classification { None, Single, Double, Multiple };
enum class Method { ClosedForm, GridOracle };
enum class Parity { EvenRestored, OddReversed };

inline std::string to_string(Classification c) {
  switch (c) {
    case Classification::None: return "none";
    case Classification::Single: return "single";
    case Classification::Double: return "double";
    case Classification::Multiple: return "multiple";
  }
  return "?";
}

inline std::string to_string(Method m) { return m == Method::ClosedForm ? "closed_form" : "grid_oracle"; }

inline std::string to_string(Parity p) { return p == Parity::EvenRestored ? "even_restored" : "odd_reversed"; }

/// A labelled closed-form root and whether it counts as a crossing.
struct Candidate {
  std::string label;
  std::optional<double> time;
  bool admitted = false;
};

struct MpembaReport {
  ObservableKind kind = ObservableKind::GroundPop;
  Region region = Region::B;
  Method method = Method::GridOracle;
  std::vector<double> crossings;
  std::vector<bool> flagged;           // temperature crossings inside a negative or undefined epoch
  std::vector<Candidate> candidates;   // closed forms only
  std::vector<double> lobe_peaks;      // grid only: max |delta| before, between and after crossings
  bool degenerate = false;
  double horizon = 0.0;
  int grid_points = 0;

  std::size_t count() const { return crossings.size(); }

  Classification classification() const {
    switch (crossings.size()) {
      case 0: return Classification::None;
      case 1: return Classification::Single;
      case 2: return Classification::Double;
      default: return Classification::Multiple;
    }
  }

  Parity parity() const { return crossings.size() % 2 == 0 ? Parity::EvenRestored : Parity::OddReversed; }

  std::string classification_label() const {
    const auto c = classification();
    if (c == Classification::Multiple) return "multiple(" + std::to_string(crossings.size()) + ")";
    return to_string(c);
  }
};

/// Coefficients of an observable difference between the two copies.
///
/// Region D: delta = sign e^{-l2 t} [c0 e^{-(l4-l2) t} + c1 t + c2]
///   (alpha_1..3 for rho_gg with sign +1, gamma_1..3 for energy with sign -1).
/// Region B: delta = e^{-l2 t} [c0 + c1 x + c2 x^m], x = e^{-(l3-l2) t}
///   (alpha_2, alpha_3, alpha_4).
/// Region E: delta = e^{-l t} [c0 + c1 t + c2 t^2] (gamma_0, gamma_1, gamma_2).
/// Regions A1/A2 (rho_gg): delta = e^{-l2 t} delta_a2
///   + 2 |delta_a| e^{-l_re t} cos(l_im t - theta).
struct DeltaCoefficients {
  Region region = Region::B;
  ObservableKind kind = ObservableKind::GroundPop;
  std::array<double, 4> lambda{};
  double sign = 1.0;
  std::array<double, 3> c{};
  double gap_ratio = 0.0;
  double delta_a2 = 0.0;
  double delta_a_re = 0.0;
  double delta_a_im = 0.0;
  double theta = 0.0;
  double lambda_re = 0.0;
  double lambda_im = 0.0;

  double evaluate(double t) const {
    switch (region) {
      case Region::D:
        return sign * std::exp(-lambda[1] * t) * (c[0] * std::exp(-(lambda[3] - lambda[1]) * t) + c[1] * t + c[2]);
      case Region::B:
        return c[0] * std::exp(-lambda[1] * t) + c[1] * std::exp(-lambda[2] * t) + c[2] * std::exp(-lambda[3] * t);
      case Region::E:
        return std::exp(-lambda[1] * t) * (c[0] + t * (c[1] + t * c[2]));
      case Region::A1:
      case Region::A2:
        return std::exp(-lambda[1] * t) * delta_a2 +
               2.0 * std::exp(-lambda_re * t) * (delta_a_re * std::cos(lambda_im * t) + delta_a_im * std::sin(lambda_im * t));
      case Region::C: break;
    }
    throw WrongRegionError("no closed-form difference in region C");
  }
};

/// Weight vector w with O = const + w . rho for the linear observables.
inline Eigen::RowVector4cd observable_weight(ObservableKind kind, const ControlParams& p) {
  Eigen::RowVector4cd w;
  if (kind == ObservableKind::GroundPop) {
    w << 0.0, 0.0, 0.0, 1.0;
  } else if (kind == ObservableKind::Energy) {
    w << 0.5 * p.d_tilde, 0.5 * p.d_tilde, 0.0, -1.0;
  } else {
    throw DomainError("closed-form differences exist for rho_gg and energy only");
  }
  return w;
}

inline DeltaCoefficients delta_coefficients(const DensityVector& rho_I, const DensityVector& rho_II,
                                            const SpectralData& spec, ObservableKind kind) {
  const Eigen::RowVector4cd w = observable_weight(kind, spec.params);
  const Vector4 da = spec.left * (rho_I.as_vector() - rho_II.as_vector());
  std::array<cplx, 4> beta{};
  for (int k = 0; k < 4; ++k) beta[k] = (w * spec.right.col(k))(0);

  DeltaCoefficients c;
  c.region = spec.region;
  c.kind = kind;
  for (int k = 0; k < 4; ++k) c.lambda[k] = spec.lambdas[k].real();

  switch (spec.region) {
    case Region::D: {
      c.sign = kind == ObservableKind::GroundPop ? 1.0 : -1.0;
      c.c[0] = c.sign * (beta[3] * da(3)).real();
      c.c[1] = c.sign * (-I * beta[1] * da(2)).real();
      c.c[2] = c.sign * (beta[1] * da(1) + beta[2] * da(2)).real();
      break;
    }
    case Region::B: {
      for (int k = 0; k < 3; ++k) c.c[k] = (beta[k + 1] * da(k + 1)).real();
      c.gap_ratio = (c.lambda[3] - c.lambda[1]) / (c.lambda[2] - c.lambda[1]);
      break;
    }
    case Region::E: {
      c.c[0] = (beta[1] * da(1) + beta[2] * da(2) + beta[3] * da(3)).real();
      c.c[1] = (-I * (beta[1] * da(2) + beta[2] * da(3))).real();
      c.c[2] = (-0.5 * beta[1] * da(3)).real();
      break;
    }
    case Region::A1:
    case Region::A2: {
      if (kind != ObservableKind::GroundPop)
        throw WrongRegionError("the oscillatory closed form covers rho_gg only");
      c.delta_a2 = da(1).real();
      c.delta_a_re = (0.5 * (da(2) + da(3))).real();
      c.delta_a_im = ((da(2) - da(3)) / (2.0 * I)).real();
      c.theta = std::atan2(c.delta_a_im, c.delta_a_re);
      c.lambda_re = spec.lambdas[2].real();
      c.lambda_im = spec.lambdas[2].imag();
      break;
    }
    case Region::C:
      throw WrongRegionError("no closed-form difference in region C");
  }
  return c;
}

inline DeltaCoefficients delta_coefficients(const QuenchExperiment& exp, ObservableKind kind) {
  exp.validate();
  return delta_coefficients(initial_condition(exp.pre_I), initial_condition(exp.pre_II), eigensystem(exp.post), kind);
}

namespace detail {

inline void admit_candidates(MpembaReport& r) {
  std::vector<double> times;
  for (const auto& cand : r.candidates)
    if (cand.admitted) times.push_back(*cand.time);
  std::sort(times.begin(), times.end());
  if (times.size() == 2 && std::abs(times[1] - times[0]) <= 1e-12 * std::max(1.0, times[1])) {
    times.clear();  // tangential contact
    for (auto& cand : r.candidates) cand.admitted = false;
  }
  r.crossings = times;
  r.flagged.assign(times.size(), false);
}

inline Candidate make_candidate(std::string label, double t) {
  Candidate c{std::move(label), std::nullopt, false};
  if (std::isfinite(t)) {
    c.time = t;
    c.admitted = t > 0.0;
  }
  return c;
}

/// Roots of a x^2 + b x + c labelled (+, -) as in (-b +- sqrt(disc)) / 2a.
inline std::optional<std::pair<double, double>> quadratic_roots(double a, double b, double c) {
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + std::copysign(sq, b));
  if (q == 0.0) return std::pair{0.0, 0.0};
  const double r1 = q / a;
  const double r2 = c / q;
  return b >= 0.0 ? std::pair{r2, r1} : std::pair{r1, r2};
}

}  // namespace detail

/// Crossing times on the line of second-order points with the smaller pair degenerate.
inline MpembaReport crossing_times_region_d(const DeltaCoefficients& c) {
  if (c.region != Region::D) throw WrongRegionError("crossing_times_region_d needs region D coefficients");
  const double g = c.lambda[3] - c.lambda[1];
  if (!(g >= 1e-12)) throw DomainError("degenerate gap lambda_4 - lambda_2");
  MpembaReport r;
  r.kind = c.kind;
  r.region = Region::D;
  r.method = Method::ClosedForm;
  const auto [c0, c1, c2] = c.c;
  if (c1 == 0.0) {
    if (c0 != 0.0 && -c2 / c0 > 0.0) r.candidates.push_back(detail::make_candidate("t_0", -std::log(-c2 / c0) / g));
    detail::admit_candidates(r);
    return r;
  }
  const double z = -g * (c0 / c1) * std::exp(g * c2 / c1);
  const double shift = c2 / c1;
  if (std::isinf(z) && z > 0.0) {
    r.candidates.push_back(
        detail::make_candidate("t_0", lambert_w0_exp(std::log(g * std::abs(c0 / c1)) + g * c2 / c1) / g - shift));
    r.candidates.push_back({"t_-1", std::nullopt, false});
  } else if (std::isfinite(z) && z >= -detail::kInvE) {
    r.candidates.push_back(detail::make_candidate("t_0", lambert_w(WBranch::W0, z) / g - shift));
    if (z < 0.0) r.candidates.push_back(detail::make_candidate("t_-1", lambert_w(WBranch::Wm1, z) / g - shift));
  } else {
    r.candidates.push_back({"t_0", std::nullopt, false});
    r.candidates.push_back({"t_-1", std::nullopt, false});
  }
  detail::admit_candidates(r);
  return r;
}

inline constexpr double kGapRatioTol = 1e-9;

/// Crossing times on the equally spaced line (gap ratio m = 2).
inline MpembaReport crossing_times_region_b(const DeltaCoefficients& c) {
  if (c.region != Region::B) throw WrongRegionError("crossing_times_region_b needs region B coefficients");
  if (std::abs(c.gap_ratio - 2.0) > kGapRatioTol)
    throw WrongRegionError("post-quench point is off the m = 2 line (gap ratio " + std::to_string(c.gap_ratio) + ")");
  MpembaReport r;
  r.kind = c.kind;
  r.region = Region::B;
  r.method = Method::ClosedForm;
  const double g = c.lambda[2] - c.lambda[1];
  const auto [a2, a3, a4] = c.c;
  auto push = [&](std::string label, std::optional<double> x) {
    if (x && *x > 0.0 && *x < 1.0) {
      r.candidates.push_back(detail::make_candidate(std::move(label), -std::log(*x) / g));
    } else {
      r.candidates.push_back({std::move(label), std::nullopt, false});
    }
  };
  if (std::abs(a4) < 1e-14) {
    push("t_+", a3 != 0.0 ? std::optional<double>(-a2 / a3) : std::nullopt);
  } else if (auto roots = detail::quadratic_roots(a4, a3, a2)) {
    push("t_+", roots->first);
    push("t_-", roots->second);
  } else {
    push("t_+", std::nullopt);
    push("t_-", std::nullopt);
  }
  detail::admit_candidates(r);
  return r;
}

/// Crossing times at the third-order point: roots of gamma_2 t^2 + gamma_1 t + gamma_0.
inline MpembaReport crossing_times_region_e(const DeltaCoefficients& c) {
  if (c.region != Region::E) throw WrongRegionError("crossing_times_region_e needs region E coefficients");
  MpembaReport r;
  r.kind = c.kind;
  r.region = Region::E;
  r.method = Method::ClosedForm;
  const auto [g0, g1, g2] = c.c;
  auto push = [&](std::string label, std::optional<double> t) {
    if (t) {
      r.candidates.push_back(detail::make_candidate(std::move(label), *t));
    } else {
      r.candidates.push_back({std::move(label), std::nullopt, false});
    }
  };
  if (std::abs(g2) < 1e-14) {
    push("t_+", g1 != 0.0 ? std::optional<double>(-g0 / g1) : std::nullopt);
  } else if (auto roots = detail::quadratic_roots(g2, g1, g0)) {
    push("t_+", roots->first);
    push("t_-", roots->second);
  } else {
    push("t_+", std::nullopt);
    push("t_-", std::nullopt);
  }
  detail::admit_candidates(r);
  return r;
}

/// Closed-form report for the region of c.
inline MpembaReport closed_form_crossings(const DeltaCoefficients& c) {
  switch (c.region) {
    case Region::D: return crossing_times_region_d(c);
    case Region::B: return crossing_times_region_b(c);
    case Region::E: return crossing_times_region_e(c);
    default: throw WrongRegionError("no closed-form crossing times in region " + to_string(c.region));
  }
}

/// Whether -delta_a2 / (2 |delta_a|) lies strictly inside the range of
/// e^{-(l_re - l2) t} cos(l_im t - theta) over t >= 0, i.e. whether the
/// damped oscillation can cancel the slow mode.
inline bool region_a1_criterion(const DeltaCoefficients& c, const SpectralData& spec) {
  if (c.region != Region::A1 && c.region != Region::A2)
    throw WrongRegionError("region_a1_criterion needs region A1 or A2");
  const double amp = std::hypot(c.delta_a_re, c.delta_a_im);
  if (amp == 0.0) return false;
  const double target = -c.delta_a2 / (2.0 * amp);
  const double k = c.lambda_re - spec.lambdas[1].real();
  if (k < 0.0) return true;
  const double w = c.lambda_im;
  auto f = [&](double t) { return std::exp(-k * t) * std::cos(w * t - c.theta); };

  const int n = 10000;
  const double span = 10.0 * 2.0 * std::numbers::pi / w;
  std::vector<double> ts(n), fs(n);
  for (int i = 0; i < n; ++i) {
    ts[i] = span * i / (n - 1);
    fs[i] = f(ts[i]);
  }
  double lo = std::min(fs.front(), fs.back());
  double hi = std::max(fs.front(), fs.back());
  for (int i = 1; i + 1 < n; ++i) {
    if (fs[i] >= fs[i - 1] && fs[i] >= fs[i + 1]) {
      const auto m = boost::math::tools::brent_find_minima([&](double t) { return -f(t); }, ts[i - 1], ts[i + 1], 26);
      hi = std::max({hi, fs[i], -m.second});
    }
    if (fs[i] <= fs[i - 1] && fs[i] <= fs[i + 1]) {
      const auto m = boost::math::tools::brent_find_minima(f, ts[i - 1], ts[i + 1], 26);
      lo = std::min({lo, fs[i], m.second});
    }
  }
  return lo < target && target < hi;
}

namespace detail {

/// Difference of an observable between the copies at time t, with the
/// branch of the entropy-rate signs used to split temperature segments.
class DifferenceSampler {
 public:
  DifferenceSampler(const QuenchExperiment& exp, ObservableKind kind)
      : kind_(kind), post_(exp.post), spec_(eigensystem(exp.post)), rho_ss_(steady_state(exp.post)) {
    const DensityVector rI = initial_condition(exp.pre_I);
    const DensityVector rII = initial_condition(exp.pre_II);
    mI_ = mode_coefficients(rI, spec_);
    mII_ = mode_coefficients(rII, spec_);
    for (int k = 0; k < 4; ++k) da_[k] = mI_.a[k] - mII_.a[k];
    if (kind == ObservableKind::GroundPop || kind == ObservableKind::Energy) weight_ = observable_weight(kind, post_);
  }

  struct Sample {
    std::optional<double> delta;
    std::optional<double> value_I;
    std::optional<double> value_II;
    int branch = 0;
  };

  Sample operator()(double t) const {
    Sample s;
    const DensityVector a = propagate_analytic(spec_, mI_, t);
    const DensityVector b = propagate_analytic(spec_, mII_, t);
    s.value_I = observable_value(kind_, a, post_, rho_ss_);
    s.value_II = observable_value(kind_, b, post_, rho_ss_);
    if (weight_) {
      s.delta = (*weight_ * propagate_modes(spec_, da_, t))(0).real();
    } else if (s.value_I && s.value_II) {
      s.delta = *s.value_I - *s.value_II;
    }
    if (kind_ == ObservableKind::Temperature && s.delta) {
      try {
        s.branch = (entropy_rate(a, post_) > 0.0 ? 2 : 0) + (entropy_rate(b, post_) > 0.0 ? 1 : 0);
      } catch (const DegenerateStateError&) {
        s.delta.reset();
      }
    }
    return s;
  }

  const SpectralData& spectral() const { return spec_; }

 private:
  ObservableKind kind_;
  ControlParams post_;
  SpectralData spec_;
  DensityVector rho_ss_;
  ModeCoefficients mI_, mII_;
  std::array<cplx, 4> da_{};
  std::optional<Eigen::RowVector4cd> weight_;
};

inline int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

inline MpembaReport grid_pass(const DifferenceSampler& sample, ObservableKind kind, double horizon, int n) {
  MpembaReport r;
  r.kind = kind;
  r.region = sample.spectral().region;
  r.method = Method::GridOracle;
  r.horizon = horizon;
  r.grid_points = n;
  const std::vector<double> ts = uniform_grid(horizon, n);
  std::vector<DifferenceSampler::Sample> ss;
  ss.reserve(ts.size());
  for (double t : ts) ss.push_back(sample(t));

  double peak = 0.0;
  double t_unsettled = -1.0;
  for (std::size_t i = 0; i < ss.size(); ++i) {
    if (ss[i].delta) peak = std::max(peak, std::abs(*ss[i].delta));
    if (kind == ObservableKind::Temperature &&
        (!ss[i].value_I || !ss[i].value_II || *ss[i].value_I < 0.0 || *ss[i].value_II < 0.0))
      t_unsettled = ts[i];
  }
  if (peak < 1e-13) {
    r.degenerate = true;
    r.lobe_peaks = {peak};
    return r;
  }

  const double width_tol = 1e-12 * horizon;
  std::optional<std::size_t> last;  // last sample with a nonzero difference in the current segment
  for (std::size_t i = 0; i < ss.size(); ++i) {
    if (!ss[i].delta) {
      last.reset();
      continue;
    }
    if (last && ss[*last].branch != ss[i].branch) last.reset();
    const int si = sign_of(*ss[i].delta);
    if (si == 0) continue;
    if (last && sign_of(*ss[*last].delta) != si) {
      double lo = ts[*last];
      double hi = ts[i];
      const int slo = sign_of(*ss[*last].delta);
      while (hi - lo > width_tol) {
        const double mid = 0.5 * (lo + hi);
        const auto v = sample(mid).delta;
        if (!v) break;
        const int sm = sign_of(*v);
        if (sm == 0) {
          lo = hi = mid;
          break;
        }
        (sm == slo ? lo : hi) = mid;
      }
      r.crossings.push_back(0.5 * (lo + hi));
    }
    last = i;
  }

  r.flagged.assign(r.crossings.size(), false);
  if (kind == ObservableKind::Temperature)
    for (std::size_t k = 0; k < r.crossings.size(); ++k) r.flagged[k] = r.crossings[k] <= t_unsettled;

  std::vector<double> bounds{0.0};
  bounds.insert(bounds.end(), r.crossings.begin(), r.crossings.end());
  bounds.push_back(std::numeric_limits<double>::infinity());
  r.lobe_peaks.assign(bounds.size() - 1, 0.0);
  for (std::size_t i = 0; i < ss.size(); ++i) {
    if (!ss[i].delta) continue;
    const auto lobe = static_cast<std::size_t>(std::upper_bound(bounds.begin() + 1, bounds.end(), ts[i]) - bounds.begin() - 1);
    r.lobe_peaks[lobe] = std::max(r.lobe_peaks[lobe], std::abs(*ss[i].delta));
  }
  return r;
}

}  // namespace detail

inline constexpr int kMaxGridPoints = 1 << 16;

/// Sign changes of the observable difference on a uniform grid, refined by
/// bisection. The grid is doubled while crossings crowd within 5 steps.
inline MpembaReport find_crossings_grid(const QuenchExperiment& exp, ObservableKind kind, double horizon,
                                        int n = kDefaultGridPoints) {
  exp.validate();
  if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
  if (n < 2) throw DomainError("grid needs at least 2 points");
  const detail::DifferenceSampler sampler(exp, kind);
  while (true) {
    MpembaReport r = detail::grid_pass(sampler, kind, horizon, n);
    const double step = horizon / (n - 1);
    bool crowded = false;
    for (std::size_t k = 1; k < r.crossings.size(); ++k)
      crowded = crowded || r.crossings[k] - r.crossings[k - 1] < 5.0 * step;
    if (!crowded || n >= kMaxGridPoints) return r;
    n = std::min(2 * n, kMaxGridPoints);
  }
}

inline MpembaReport find_crossings_grid(const QuenchExperiment& exp, ObservableKind kind) {
  return find_crossings_grid(exp, kind, default_horizon(eigensystem(exp.post)));
}

}  // namespace mpemba
