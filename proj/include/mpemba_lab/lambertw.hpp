#pragma once

#include "lindblad_core.hpp"

#include <cmath>
#include <limits>

namespace mpemba {

enum class WBranch { W0, Wm1 };

namespace detail {

inline constexpr double kInvE = 0.36787944117144233;  // nearest double to exp(-1)

inline double lambert_initial_guess(WBranch branch, double x) {
  const double p2 = 2.0 * (std::exp(1.0) * x + 1.0);
  if (branch == WBranch::W0) {
    if (x < -0.25) {
      const double p = std::sqrt(std::max(p2, 0.0));
      return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    }
    if (x < 3.0) return std::log1p(x) * (1.0 - std::log1p(std::log1p(x)) / (2.0 + std::log1p(x)));
    const double l1 = std::log(x);
    const double l2 = std::log(l1);
    return l1 - l2 + l2 / l1;
  }
  if (x < -0.25) {
    const double p = std::sqrt(std::max(p2, 0.0));
    return -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p * p * p;
  }
  const double l1 = std::log(-x);
  const double l2 = std::log(-l1);
  return l1 - l2 + l2 / l1;
}

}  // namespace detail

/// Real branches of the Lambert W function, w e^w = x.
inline double lambert_w(WBranch branch, double x) {
  if (std::isnan(x)) throw DomainError("lambert_w: NaN argument");
  if (x < -detail::kInvE) throw DomainError("lambert_w: argument below -1/e");
  if (branch == WBranch::Wm1 && x >= 0.0) throw DomainError("lambert_w: W_{-1} needs x < 0");
  if (x == -detail::kInvE) return -1.0;
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;

  double w = detail::lambert_initial_guess(branch, x);
  for (int it = 0; it < 50; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    const double next = w - step;
    if (!std::isfinite(next)) break;
    const double ulp = std::abs(std::nextafter(next, std::numeric_limits<double>::infinity()) - next);
    w = next;
    if (std::abs(step) <= 4.0 * ulp) break;
  }
  if (branch == WBranch::W0 && w < -1.0) w = -1.0;
  if (branch == WBranch::Wm1 && w > -1.0) w = -1.0;
  return w;
}

/// W_0(e^y) for arguments e^y too large to form, via w + ln w = y.
inline double lambert_w0_exp(double y) {
  if (std::isnan(y)) throw DomainError("lambert_w0_exp: NaN argument");
  if (y < 700.0) return lambert_w(WBranch::W0, std::exp(y));
  if (std::isinf(y)) return y;
  double w = y - std::log(y);
  for (int it = 0; it < 50; ++it) {
    const double step = (w + std::log(w) - y) * w / (w + 1.0);
    w -= step;
    if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * w) break;
  }
  return w;
}

}  // namespace mpemba
