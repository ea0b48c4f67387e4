#include "support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <vector>

using namespace mpemba;
using mpemba::testing::d_line_gamma_4;

namespace {

/// Eigenvalues of i L from a general complex eigensolver.
std::vector<cplx> solver_lambdas(const ControlParams& p) {
  Eigen::ComplexEigenSolver<Matrix4> es(I * build_lindbladian(p));
  return {es.eigenvalues().begin(), es.eigenvalues().end()};
}

void expect_biorthogonal(const SpectralData& s, double tol) {
  EXPECT_LT((s.left * s.right - Matrix4::Identity()).cwiseAbs().maxCoeff(), tol) << to_string(s.region);
}

/// Spectral projector onto the generalized eigenspace of the columns [first, last].
Matrix4 projector(const Matrix4& right, const Matrix4& left, int first, int last) {
  Matrix4 p = Matrix4::Zero();
  for (int k = first; k <= last; ++k) p += right.col(k) * left.row(k);
  return p;
}

}  // namespace

TEST(Spectrum, NondegenerateEigenvaluesMatchGeneralSolver) {
  for (const ControlParams p : {ControlParams{2.5, 0.5}, ControlParams{0.8, 4.0}, ControlParams{6.0, 30.0},
                                ControlParams{4.0, 1.0}, ControlParams{0.3, 0.2}}) {
    std::vector<cplx> ref = solver_lambdas(p);
    for (const cplx& l : eigensystem(p).lambdas) {
      const auto it = std::min_element(ref.begin(), ref.end(), [&](cplx a, cplx b) { return std::abs(a - l) < std::abs(b - l); });
      EXPECT_LT(std::abs(*it - l), 1e-10) << p.d_tilde << " " << p.gamma_tilde << " " << l;
      ref.erase(it);
    }
  }
}

TEST(Spectrum, OrderingConvention) {
  const SpectralData a1 = eigensystem({2.5, 0.5});
  EXPECT_EQ(a1.lambdas[0], cplx(0.0));
  EXPECT_EQ(a1.lambdas[1].imag(), 0.0);
  EXPECT_GT(a1.lambdas[2].imag(), 0.0);
  EXPECT_EQ(a1.lambdas[3], std::conj(a1.lambdas[2]));

  const SpectralData b = eigensystem({6.0, 30.0});
  EXPECT_LT(b.lambdas[1].real(), b.lambdas[2].real());
  EXPECT_LT(b.lambdas[2].real(), b.lambdas[3].real());
}

TEST(Spectrum, RegionTagsOnSamplingBoxes) {
  for (double d : {3.0, 4.5, 6.0})
    for (double g : {0.3, 1.0, 2.0}) EXPECT_EQ(classify_region({d, g}), Region::A1) << d << " " << g;
  for (double d : {0.5, 0.75, 1.0})
    for (double g : {1.0, 5.0, 10.0}) EXPECT_EQ(classify_region({d, g}), Region::A2) << d << " " << g;
  for (double g : {24.0, 30.0, 38.0}) EXPECT_EQ(classify_region({6.0, g}), Region::B) << g;
  EXPECT_EQ(classify_region({6.0, 6.0 * std::sqrt(17.0)}), Region::B);
  EXPECT_EQ(classify_region({4.0, d_line_gamma_4()}), Region::D);
  EXPECT_EQ(classify_region({4.0, region_c_gamma(4.0)}), Region::C);
  EXPECT_EQ(classify_region(e_point()), Region::E);
}

TEST(Spectrum, DLineMatchesClosedForm) {
  EXPECT_NEAR(region_d_gamma(4.0), d_line_gamma_4(), 1e-13);
  EXPECT_NEAR(region_d_gamma(4.0), 18.145380513947318199, 1e-13);
  EXPECT_NEAR(region_d_gamma(-4.0), region_d_gamma(4.0), 0.0);
  EXPECT_THROW(region_d_gamma(2.0), DomainError);
  EXPECT_THROW(region_c_gamma(2.0), DomainError);
  EXPECT_THROW(region_b_m2_gamma(1.0), DomainError);
}

TEST(Spectrum, RegionDEigenvaluesHighPrecisionGolden) {
  // Roots of the characteristic cubic evaluated with 40 significant digits.
  const SpectralData s = eigensystem({4.0, d_line_gamma_4()});
  ASSERT_EQ(s.region, Region::D);
  EXPECT_NEAR(s.lambdas[1].real(), 10.231631908010336530, 1e-12);
  EXPECT_NEAR(s.lambdas[2].real(), 10.231631908010336530, 1e-12);
  EXPECT_NEAR(s.lambdas[3].real(), 15.827497211873963338, 1e-12);
  EXPECT_LE(s.jordan_residual(), 1e-10);
  EXPECT_EQ(s.jordan(1, 2), cplx(1.0));
  expect_biorthogonal(s, 1e-12);
}

TEST(Spectrum, RegionDLeftVectorsMatchTabulatedValues) {
  const double d = 4.0;
  const double G = d_line_gamma_4();
  const SpectralData s = eigensystem({d, G});
  const double l2 = s.lambdas[1].real();
  const double l4 = s.lambdas[3].real();
  const double S = 4.0 + 2.0 * d * d + G * G;
  const double eta = G * G * G - 2.0 * G * G * (l2 + 2.0 * l4) + 4.0 * G * (-3.0 + 2.0 * l2 * l4 + l4 * l4) +
                     8.0 * (l2 + 2.0 * l4 - l2 * l4 * l4);
  const double d2 = -16.0 + std::pow(G, 4) - 8.0 * G * l4 - 2.0 * G * G * G * l4 +
                    2.0 * d * d * ((G - 2.0 * l2) * (G - 2.0 * l4) - 4.0);
  const double d3 = 4.0 * l2 * l2 * (G * G - 2.0 * G * l4 - 4.0);
  const double A4 = 4.0 + (G - 2.0 * l4) * (G - 2.0 * l4);
  const double A2 = 4.0 + (G - 2.0 * l2) * (G - 2.0 * l2);
  const double l21re = -A2 * A4 / (4.0 * d * (l2 - l4) * eta);
  const double l21im = -A2 * (G - 2.0 * l4) * A4 / (8.0 * d * (l2 - l4) * eta);
  const double l43 = -A4 * (d2 - d3 - 32.0 * l2 * (G - l4)) / (4.0 * (l2 - l4) * S * eta);
  const double l44 = A4 * (d2 + d3 + 4.0 * G * l2 * (4.0 - G * G + 2.0 * G * l4)) / (4.0 * (l2 - l4) * S * eta);
  // The table labels the imaginary part of l_31 as l_32^re.
  const double l31re = 4.0 * d * (l2 + l4 - G) / eta;
  const double l31im = d * ((G - 2.0 * l2) * (G - 2.0 * l4) - 4.0) / eta;
  const cplx l33 = 4.0 * I * d * d * (S + 4.0 * l2 * l4) / (S * eta);
  const cplx l34 = -4.0 * I * d * d * (S - 4.0 * l2 * l4) / (S * eta);

  Eigen::RowVector4cd table4, table3;
  table4 << cplx(l21re, l21im), cplx(l21re, -l21im), l43, l44;
  table3 << cplx(l31re, l31im), cplx(-l31re, l31im), l33, l34;
  EXPECT_LT((s.left.row(3) - table4).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((s.left.row(2) - table3).cwiseAbs().maxCoeff(), 1e-10);

  // The tabulated chain vector, written with lambda_4, satisfies L r3 = -i l2 r3 + r2.
  const double u4 = 0.5 * G - l4;
  Vector4 r3;
  r3 << (1.0 - I * u4) / d, (-1.0 - I * u4) / d, 0.0, 0.0;
  const Vector4 defect = build_lindbladian({d, G}) * r3 + I * l2 * r3 - s.right.col(1);
  EXPECT_LT(mpemba::testing::max_abs(defect), 1e-10);
}

TEST(Spectrum, RegionA1LeftVectorsMatchTabulatedValues) {
  const double d = 2.5;
  const double G = 0.5;
  const SpectralData s = eigensystem({d, G});
  ASSERT_EQ(s.region, Region::A1);
  const double l2 = s.lambdas[1].real();
  const double lre = s.lambdas[2].real();
  const double lim = s.lambdas[2].imag();
  const double S = 4.0 + 2.0 * d * d + G * G;
  const double A2 = 4.0 + (G - 2.0 * l2) * (G - 2.0 * l2);
  const double den = lim * lim + (l2 - lre) * (l2 - lre);
  const double g2 = (G - 2.0 * lre) * (G - 2.0 * lre);
  const double l21re = -A2 * (4.0 * (lim * lim - 1.0) + g2) / (32.0 * d * den);
  const double l21im = -A2 * (G - 2.0 * lre) / (8.0 * d * den);
  const double l23 = -A2 * (2.0 * d * d + G * G + 4.0 * (1.0 + lim * lim + lre * lre)) / (8.0 * S * den);
  const double xi1 = G * G * lim - 4.0 * G * l2 * lim + 4.0 * lim * (l2 * l2 - 1.0);
  const double xi2 = 4.0 * G * (l2 - lre) + 4.0 * (lre * lre - l2 * l2 + lim * lim);
  const double xi3 = -G * G * l2 + 2.0 * l2 * l2 * (G - 2.0 * lre) - 4.0 * lre + G * lre * (G - 2.0 * lre) +
                     4.0 * l2 * lre * lre;
  const double D = 64.0 * d * lim * den;
  const double Bp = 4.0 * (1.0 + lim) * (1.0 + lim) + g2;
  const double Bm = 4.0 * (lim - 1.0) * (lim - 1.0) + g2;
  const double l31re = (xi1 + xi2) * Bp / D;
  const double l32re = (xi1 - xi2) * Bm / D;
  const double l31im = (xi3 - 2.0 * G * lim * (lim - 2.0) + 4.0 * l2 * (lim - 1.0) * (lim - 1.0)) * Bp / D;
  const double l32im = (xi3 - 2.0 * G * lim * (lim + 2.0) + 4.0 * l2 * (lim + 1.0) * (lim + 1.0)) * Bm / D;

  EXPECT_LT(std::abs(s.left(1, 0) - cplx(l21re, l21im)), 1e-12);
  EXPECT_LT(std::abs(s.left(1, 1) - cplx(l21re, -l21im)), 1e-12);
  EXPECT_LT(std::abs(s.left(1, 2) - l23), 1e-12);
  EXPECT_LT(std::abs(s.left(2, 0) - cplx(l31re, l31im)), 1e-12);
  EXPECT_LT(std::abs(s.left(2, 1) - cplx(l32re, l32im)), 1e-12);
  EXPECT_LT(std::abs(s.left(3, 0) - cplx(l32re, -l32im)), 1e-12);
  EXPECT_LT(std::abs(s.left(3, 1) - cplx(l31re, -l31im)), 1e-12);
}

TEST(Spectrum, ClosedFormLeftVectorsMatchNumericalInverse) {
  for (const ControlParams p : {ControlParams{2.5, 0.5}, ControlParams{0.8, 4.0}, ControlParams{6.0, 30.0},
                                ControlParams{6.0, 6.0 * std::sqrt(17.0)}}) {
    const SpectralData s = eigensystem(p);
    const Matrix4 inv = s.right.inverse();
    EXPECT_LT((inv - s.left).cwiseAbs().maxCoeff(), 1e-10) << to_string(s.region);
    EXPECT_LE(s.jordan_residual(), 1e-10);
  }
}

TEST(Spectrum, ThirdOrderPointMatchesTabulatedVectors) {
  const SpectralData s = eigensystem(e_point());
  ASSERT_EQ(s.region, Region::E);
  for (int k = 1; k < 4; ++k) EXPECT_NEAR(s.lambdas[k].real(), 4.0 * std::numbers::sqrt3, 1e-12);
  EXPECT_LE(s.jordan_residual(), 1e-10);
  expect_biorthogonal(s, 1e-12);

  // Tabulated vectors, with the fourth left row conjugated in its first two entries.
  const double s2 = std::numbers::sqrt2, s3 = std::numbers::sqrt3, s6 = std::sqrt(6.0);
  Matrix4 R;
  R.col(0) << cplx(-1.0, -3.0 * s3) / (15.0 * s2), cplx(-1.0, 3.0 * s3) / (15.0 * s2), 1.0 / 15.0, 1.0;
  R.col(1) << cplx(-1.0, s3) / s2, cplx(-1.0, -s3) / s2, -1.0, 1.0;
  R.col(2) << cplx(1.0, s3) / (2.0 * s2), cplx(-1.0, s3) / (2.0 * s2), 0.0, 0.0;
  R.col(3) << 1.0 / (2.0 * s2), 1.0 / (2.0 * s2), 0.0, 0.0;
  Matrix4 Lp;
  Lp.row(0) << 0.0, 0.0, 15.0 / 16.0, 15.0 / 16.0;
  Lp.row(1) << 0.0, 0.0, -15.0 / 16.0, 1.0 / 16.0;
  Lp.row(2) << s2, -s2, 9.0 * I * s3 / 4.0, I * s3 / 4.0;
  Lp.row(3) << cplx(s2, -s6), cplx(s2, s6), 5.0, 1.0;
  EXPECT_LT((Lp * R - Matrix4::Identity()).cwiseAbs().maxCoeff(), 1e-14);
  Matrix4 J = Matrix4::Zero();
  for (int k = 1; k < 4; ++k) J(k, k) = -I * 4.0 * s3;
  J(1, 2) = 1.0;
  J(2, 3) = 1.0;
  EXPECT_LT((Lp * build_lindbladian(e_point()) * R - J).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((projector(R, Lp, 1, 3) - projector(s.right, s.left, 1, 3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((projector(R, Lp, 0, 0) - projector(s.right, s.left, 0, 0)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Spectrum, CLineIsSecondOrderWithFastPairDegenerate) {
  for (double d : {3.0, 4.0, 6.0}) {
    const ControlParams p{d, region_c_gamma(d)};
    const SpectralData s = eigensystem(p);
    ASSERT_EQ(s.region, Region::C);
    EXPECT_LT(s.lambdas[1].real(), s.lambdas[2].real());
    EXPECT_EQ(s.lambdas[2], s.lambdas[3]);
    EXPECT_LE(s.jordan_residual(), 1e-10);
    EXPECT_LT(std::abs(characteristic_cubic(p, s.lambdas[2])), 1e-9 * std::pow(p.gamma_tilde, 3));
  }
}

TEST(Spectrum, GapLineGivesEquallySpacedRates) {
  for (double d : {4.0, 6.0, 10.0}) {
    const SpectralData s = eigensystem({d, region_b_m2_gamma(d)});
    ASSERT_EQ(s.region, Region::B);
    const double g1 = s.lambdas[2].real() - s.lambdas[1].real();
    const double g2 = s.lambdas[3].real() - s.lambdas[2].real();
    EXPECT_LE(std::abs(g2 - g1), 1e-9 * std::max(1.0, s.lambdas[3].real()));
  }
  EXPECT_NEAR(region_b_m2_gamma(6.0), 6.0 * std::sqrt(17.0), 1e-13);
}

TEST(Spectrum, DegeneracyToleranceControlsSnapping) {
  const double g = d_line_gamma_4() + 1e-4;
  EXPECT_NE(classify_region({4.0, g}), Region::D);
  const double delta = std::abs(depressed_cubic({4.0, g}).normalized_discriminant());
  EXPECT_EQ(classify_region({4.0, g}, 2.0 * delta), Region::D);
  EXPECT_THROW(classify_region({4.0, g}, 0.0), DomainError);
}

TEST(Spectrum, ZeroDriveUsesExactVectors) {
  const SpectralData s = eigensystem({0.0, 1.5});
  EXPECT_LE(s.jordan_residual(), 1e-14);
  expect_biorthogonal(s, 1e-14);
}

TEST(Spectrum, TinyDriveFallsBackToNullSpace) {
  for (double d : {1e-9, 1e-5}) {
    const SpectralData s = eigensystem({d, 1.5});
    EXPECT_LE(s.jordan_residual(), 1e-8);
    expect_biorthogonal(s, 1e-8);
  }
}

TEST(Spectrum, LambdaSlowIsSmallestNonzeroRealPart) {
  EXPECT_NEAR(eigensystem({2.5, 0.5}).lambda_slow(), eigensystem({2.5, 0.5}).lambdas[1].real(), 0.0);
  const SpectralData a2 = eigensystem({0.8, 4.0});
  ASSERT_EQ(a2.region, Region::A2);
  EXPECT_EQ(a2.lambda_slow(), std::min(a2.lambdas[1].real(), a2.lambdas[2].real()));
}
