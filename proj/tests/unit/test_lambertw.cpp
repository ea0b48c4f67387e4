#include "mpemba_lab/lambertw.hpp"

#include <gtest/gtest.h>

#include <boost/math/special_functions/lambert_w.hpp>

#include <cmath>
#include <limits>
#include <numbers>

using mpemba::DomainError;
using mpemba::lambert_w;
using mpemba::WBranch;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(LambertW, PrincipalBranchMatchesBoost) {
  for (int i = 0; i < 400; ++i) {
    const double x = -0.36 + std::pow(10.0, -3.0 + 8.0 * i / 399.0);
    EXPECT_LE(rel(lambert_w(WBranch::W0, x), boost::math::lambert_w0(x)), 4e-15) << x;
  }
}

TEST(LambertW, LowerBranchMatchesBoost) {
  for (int i = 1; i < 400; ++i) {
    const double x = -std::exp(-1.0 - 0.1 * i);
    EXPECT_LE(rel(lambert_w(WBranch::Wm1, x), boost::math::lambert_wm1(x)), 4e-15) << x;
  }
}

TEST(LambertW, DefiningIdentityRoundTrip) {
  for (int i = 0; i < 1000; ++i) {
    const double w = -1.0 + 1e-3 + 50.0 * i / 999.0;
    const double x = w * std::exp(w);
    const double got = lambert_w(WBranch::W0, x);
    EXPECT_LE(rel(got * std::exp(got), x), 1e-14) << w;
  }
  for (int i = 0; i < 1000; ++i) {
    const double w = -1.0 - 1e-3 - 600.0 * i / 999.0;
    const double x = w * std::exp(w);
    if (x == 0.0) continue;
    const double got = lambert_w(WBranch::Wm1, x);
    EXPECT_LE(rel(got * std::exp(got), x), 1e-14) << w;
  }
}

TEST(LambertW, KnownValues) {
  EXPECT_NEAR(lambert_w(WBranch::W0, std::numbers::e), 1.0, 1e-15);
  EXPECT_NEAR(lambert_w(WBranch::W0, 1.0), 0.56714329040978387, 1e-16);
  EXPECT_EQ(lambert_w(WBranch::W0, 0.0), 0.0);
  EXPECT_NEAR(lambert_w(WBranch::Wm1, -2.0 * std::exp(-2.0)), -2.0, 1e-14);
}

TEST(LambertW, BranchPoint) {
  const double x = -std::exp(-1.0);
  EXPECT_NEAR(lambert_w(WBranch::W0, x), -1.0, 1e-7);
  EXPECT_NEAR(lambert_w(WBranch::Wm1, x), -1.0, 1e-7);
  const double just_above = std::nextafter(x, 0.0);
  EXPECT_NEAR(lambert_w(WBranch::W0, just_above), -1.0, 1e-7);
  EXPECT_NEAR(lambert_w(WBranch::Wm1, just_above), -1.0, 1e-7);
  EXPECT_GE(lambert_w(WBranch::W0, just_above), -1.0);
  EXPECT_LE(lambert_w(WBranch::Wm1, just_above), -1.0);
}

TEST(LambertW, RejectsOutOfDomain) {
  EXPECT_THROW(lambert_w(WBranch::W0, -0.5), DomainError);
  EXPECT_THROW(lambert_w(WBranch::Wm1, 0.1), DomainError);
  EXPECT_THROW(lambert_w(WBranch::Wm1, 0.0), DomainError);
  EXPECT_THROW(lambert_w(WBranch::W0, std::numeric_limits<double>::quiet_NaN()), DomainError);
}

TEST(LambertW, ExponentialArgument) {
  for (double y : {-5.0, 0.0, 3.0, 100.0, 600.0}) {
    EXPECT_LE(rel(mpemba::lambert_w0_exp(y), boost::math::lambert_w0(std::exp(y))), 4e-15) << y;
  }
  for (double y : {700.0, 931.0, 5000.0, 1e6}) {
    const double w = mpemba::lambert_w0_exp(y);
    EXPECT_LE(std::abs(w + std::log(w) - y), 4.0 * std::numeric_limits<double>::epsilon() * y) << y;
  }
}
