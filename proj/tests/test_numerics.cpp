#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "tacclust/linalg.hpp"
#include "tacclust/rng.hpp"
#include "test_support.hpp"

using namespace tacclust;

namespace {

Matrix randomSymmetric(std::size_t n, std::uint64_t seed) {
  Matrix a = testsupport::randomMatrix(n, n, seed);
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

double orthonormalityError(const Matrix& q) {
  const Matrix g = q.transpose() * q;
  return maxAbs(g - Matrix::identity(g.rows()));
}

}  // namespace

TEST(SymmetricEigen, IdentityHasUnitEigenvalues) {
  const SymEigen e = symmetricEigen(Matrix::identity(3));
  ASSERT_EQ(e.values.size(), 3u);
  for (double v : e.values) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(SymmetricEigen, DiagonalMatrixIsAxisAligned) {
  const SymEigen e = symmetricEigen(Matrix{{1.0, 0.0}, {0.0, 4.0}});
  EXPECT_NEAR(e.values[0], 4.0, 1e-12);
  EXPECT_NEAR(e.values[1], 1.0, 1e-12);
  EXPECT_NEAR(std::abs(e.vectors(1, 0)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(e.vectors(0, 1)), 1.0, 1e-12);
}

TEST(SymmetricEigen, TwoByTwoClosedForm) {
  const SymEigen e = symmetricEigen(Matrix{{2.0, 1.0}, {1.0, 2.0}});
  EXPECT_NEAR(e.values[0], 3.0, 1e-12);
  EXPECT_NEAR(e.values[1], 1.0, 1e-12);
}

TEST(SymmetricEigen, RejectsBadInput) {
  EXPECT_THROW(symmetricEigen(Matrix(2, 3)), Error);
  EXPECT_THROW(symmetricEigen(Matrix{{1.0, 2.0}, {2.5, 1.0}}), Error);
}

TEST(SymmetricEigen, RandomInvariants) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 2 + seed % 9;
    const Matrix a = randomSymmetric(n, seed);
    const SymEigen e = symmetricEigen(a);
    const double norm = frobeniusNorm(a);
    EXPECT_LT(orthonormalityError(e.vectors), 1e-8);
    double trace = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      trace += a(i, i);
      sum += e.values[i];
      if (i > 0) {
        EXPECT_GE(e.values[i - 1], e.values[i]);
      }
      for (std::size_t r = 0; r < n; ++r) {
        double av = 0.0;
        for (std::size_t c = 0; c < n; ++c) av += a(r, c) * e.vectors(c, i);
        EXPECT_NEAR(av, e.values[i] * e.vectors(r, i), 1e-6 * norm);
      }
      // Sign convention: the largest-magnitude entry of each vector is positive.
      double big = 0.0;
      for (std::size_t r = 0; r < n; ++r)
        if (std::abs(e.vectors(r, i)) > std::abs(big)) big = e.vectors(r, i);
      EXPECT_GT(big, 0.0);
    }
    EXPECT_NEAR(sum, trace, 1e-8 * std::max(1.0, norm));
    EXPECT_EQ(symmetricEigen(a).vectors, e.vectors);
  }
}

TEST(Svd, ZeroMatrix) {
  const Svd s = svd(Matrix(4, 3));
  for (double v : s.singularValues) EXPECT_EQ(v, 0.0);
  EXPECT_LT(orthonormalityError(s.u), 1e-8);
  EXPECT_LT(orthonormalityError(s.vt.transpose()), 1e-8);
}

TEST(Svd, OrthogonalMatrixHasUnitSingularValues) {
  const SymEigen e = symmetricEigen(randomSymmetric(5, 7));
  const Svd s = svd(e.vectors);
  for (double v : s.singularValues) EXPECT_NEAR(v, 1.0, 1e-8);
}

TEST(Svd, RankOneOuterProduct) {
  // |u| = 2, |v| = 3.
  const std::vector<double> u = {2.0 / std::sqrt(2.0), 2.0 / std::sqrt(2.0), 0.0, 0.0};
  const std::vector<double> v = {1.0, 2.0, 2.0};
  Matrix a(4, 3);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) a(i, j) = u[i] * v[j];
  const Svd s = svd(a);
  EXPECT_NEAR(s.singularValues[0], 6.0, 1e-10);
  for (std::size_t i = 1; i < s.singularValues.size(); ++i) EXPECT_NEAR(s.singularValues[i], 0.0, 1e-7);
}

TEST(Svd, ReconstructionAndOrthonormality) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t rows = 2 + seed % 7;
    const std::size_t cols = 2 + (seed * 3) % 6;
    const Matrix a = testsupport::randomMatrix(rows, cols, 100 + seed);
    const Svd s = svd(a);
    const std::size_t k = s.singularValues.size();
    Matrix us = s.u;
    for (std::size_t i = 0; i < us.rows(); ++i)
      for (std::size_t c = 0; c < k; ++c) us(i, c) *= s.singularValues[c];
    EXPECT_LT(maxAbs(us * s.vt - a), 1e-8 * std::max(1.0, frobeniusNorm(a)));
    EXPECT_LT(orthonormalityError(s.u), 1e-8);
    EXPECT_LT(orthonormalityError(s.vt.transpose()), 1e-8);
    for (std::size_t c = 1; c < k; ++c) EXPECT_GE(s.singularValues[c - 1], s.singularValues[c]);
    for (double v : s.singularValues) EXPECT_GE(v, 0.0);
  }
}

TEST(PairwiseSqDist, SingleRow) {
  const Matrix d = pairwiseSqDist(Matrix{{1.0, 2.0}});
  ASSERT_EQ(d.rows(), 1u);
  EXPECT_EQ(d(0, 0), 0.0);
}

TEST(PairwiseSqDist, ThreeFourFive) {
  const Matrix d = pairwiseSqDist(Matrix{{0.0, 0.0}, {3.0, 4.0}});
  EXPECT_EQ(d(0, 1), 25.0);
  EXPECT_EQ(d(1, 0), 25.0);
}

TEST(PairwiseSqDist, MatchesNaiveOracleAndTriangleInequality) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix x = testsupport::randomMatrix(5 + seed % 5, 3, seed);
    const Matrix d = pairwiseSqDist(x);
    const Matrix o = oracle::naiveSqDist(x);
    EXPECT_LT(maxAbs(d - o), 1e-10);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      EXPECT_EQ(d(i, i), 0.0);
      for (std::size_t j = 0; j < x.rows(); ++j) {
        EXPECT_EQ(d(i, j), d(j, i));
        EXPECT_GE(d(i, j), 0.0);
        for (std::size_t k = 0; k < x.rows(); ++k)
          EXPECT_LE(std::sqrt(d(i, k)), std::sqrt(d(i, j)) + std::sqrt(d(j, k)) + 1e-12);
      }
    }
  }
}

TEST(Cholesky, Identity) { EXPECT_EQ(choleskyWithJitter(Matrix::identity(3), 0.0), Matrix::identity(3)); }

TEST(Cholesky, HandComputed) {
  const Matrix l = choleskyWithJitter(Matrix{{4.0, 2.0}, {2.0, 3.0}}, 0.0);
  EXPECT_NEAR(l(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(l(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(l(1, 1), std::sqrt(2.0), 1e-15);
  EXPECT_EQ(l(0, 1), 0.0);
}

TEST(Cholesky, ZeroMatrixWithJitter) {
  const Matrix l = choleskyWithJitter(Matrix(3, 3), 1e-6);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(l(i, j), i == j ? std::sqrt(1e-6) : 0.0, 1e-18);
}

TEST(Cholesky, ReconstructsRandomSpd) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix b = testsupport::randomMatrix(6, 6, seed);
    const Matrix a = b * b.transpose();
    const Matrix l = choleskyWithJitter(a, 1e-6);
    Matrix target = a;
    for (std::size_t i = 0; i < 6; ++i) target(i, i) += 1e-6;
    EXPECT_LT(maxAbs(l * l.transpose() - target), 1e-8 * frobeniusNorm(a));
  }
}

TEST(Cholesky, NotPositiveDefiniteThrowsDegenerate) {
  EXPECT_THROW(choleskyWithJitter(Matrix{{1.0, 2.0}, {2.0, 1.0}}, 1e-6), DegenerateCovariance);
}

TEST(Rng, SameSeedSameStream) {
  Rng a = seededRng(123);
  Rng b = seededRng(123);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  Rng c(123);
  Rng d(123);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(c.gaussian(), d.gaussian());
}

TEST(Rng, UniformMean) {
  Rng r(9);
  double s = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
  }
  EXPECT_NEAR(s / 1e5, 0.5, 0.01);
}

TEST(Rng, GaussianVariance) {
  Rng r(10);
  double s = 0.0;
  double ss = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double g = r.gaussian();
    s += g;
    ss += g * g;
  }
  const double mean = s / 1e5;
  EXPECT_NEAR(ss / 1e5 - mean * mean, 1.0, 0.05);
}

TEST(Rng, KnownFirstOutputs) {
  // Reference values from an independent reimplementation of splitmix64 + xoshiro256**.
  Rng r(0);
  EXPECT_EQ(r.next(), 0x99ec5f36cb75f2b4ULL);
  EXPECT_EQ(r.next(), 0xbf6e1f784956452aULL);
  EXPECT_EQ(r.next(), 0x1a5f849d4933e6e0ULL);
}

TEST(Rng, HashStringIsFnv1a) {
  EXPECT_EQ(hashString(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(hashString("KMeans"), 0x1771c22af0645b1cULL);
  EXPECT_NE(mixSeed(1, 2), mixSeed(2, 1));
}

TEST(Rng, BelowStaysInRange) {
  Rng r(4);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(r.below(7), 7u);
}
