#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "tacclust/reduce.hpp"
#include "test_support.hpp"

using namespace tacclust;

namespace {

Matrix naiveProject(const Matrix& x, const std::vector<double>& mean, const Matrix& comps) {
  Matrix out(x.rows(), comps.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t c = 0; c < comps.rows(); ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) s += (x(i, j) - mean[j]) * comps(c, j);
      out(i, c) = s;
    }
  return out;
}

Matrix biasedCovariance(const Matrix& y) {
  const auto m = columnMeans(y);
  Matrix c(y.cols(), y.cols());
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t a = 0; a < y.cols(); ++a)
      for (std::size_t b = 0; b < y.cols(); ++b) c(a, b) += (y(i, a) - m[a]) * (y(i, b) - m[b]);
  for (double& v : c.data()) v /= static_cast<double>(y.rows());
  return c;
}

double totalVariance(const Matrix& x) {
  const auto m = columnMeans(x);
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) s += (x(i, j) - m[j]) * (x(i, j) - m[j]);
  return s / static_cast<double>(x.rows() - 1);
}

// Rank-r data in `cols` dimensions.
Matrix lowRank(std::size_t n, std::size_t cols, std::size_t r, std::uint64_t seed) {
  return testsupport::randomMatrix(n, r, seed) * testsupport::randomMatrix(r, cols, seed + 1000);
}

}  // namespace

TEST(Pca, ComponentsOrthonormalAndVarianceSorted) {
  const Matrix x = testsupport::randomMatrix(60, 12, 1);
  const PcaModel m = fitPca(x);
  EXPECT_EQ(m.components.rows(), 5u);
  EXPECT_LT(maxAbs(multiplyTransposed(m.components, m.components) - Matrix::identity(5)), 1e-8);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_GE(m.explainedVariance[i], 0.0);
    if (i > 0) {
      EXPECT_GE(m.explainedVariance[i - 1], m.explainedVariance[i]);
    }
  }
}

TEST(Pca, RankOneData) {
  Matrix x(30, 6);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 6; ++j) x(i, j) = 1.0 + static_cast<double>(j) + (static_cast<double>(i) - 14.5) * (j % 2 ? 1.0 : -2.0);
  const PcaModel m = fitPca(x);
  EXPECT_GT(m.explainedVariance[0], 0.0);
  for (std::size_t i = 1; i < 5; ++i) EXPECT_NEAR(m.explainedVariance[i], 0.0, 1e-9 * m.explainedVariance[0]);
}

TEST(Pca, AnisotropicCloudMatchesCovarianceEigen) {
  const std::vector<double> variances = {5, 4, 3, 2, 1, 0.1, 0.05};
  Rng rng(3);
  Matrix x(4000, variances.size());
  // Columns are permuted so that the variance order differs from axis order.
  const std::vector<std::size_t> axis = {3, 0, 6, 1, 5, 2, 4};
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t c = 0; c < variances.size(); ++c) x(i, axis[c]) = std::sqrt(variances[c]) * rng.gaussian();
  const PcaModel m = fitPca(x);

  Matrix cov = biasedCovariance(x);
  for (double& v : cov.data()) v *= 4000.0 / 3999.0;
  const SymEigen e = symmetricEigen(cov);
  for (std::size_t c = 0; c < 5; ++c) {
    EXPECT_NEAR(m.explainedVariance[c], e.values[c], 1e-8 * e.values[0]);
    double align = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) align += m.components(c, j) * e.vectors(j, c);
    EXPECT_NEAR(std::abs(align), 1.0, 1e-6);
    // Dominant coordinate is the axis carrying the c-th largest variance.
    std::size_t best = 0;
    for (std::size_t j = 1; j < x.cols(); ++j)
      if (std::abs(m.components(c, j)) > std::abs(m.components(c, best))) best = j;
    EXPECT_EQ(best, axis[c]);
  }
}

TEST(Pca, RankFiveReconstructionExact) {
  const Matrix x = lowRank(40, 10, 5, 7);
  const PcaModel m = fitPca(x);
  EXPECT_LT(maxAbs(m.inverseTransform(m.transform(x)) - x), 1e-8 * std::max(1.0, maxAbs(x)));
  EXPECT_NEAR(std::accumulate(m.explainedVariance.begin(), m.explainedVariance.end(), 0.0), totalVariance(x),
              1e-8 * totalVariance(x));
}

TEST(Pca, ExplainedVarianceBoundedByTotal) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix x = testsupport::randomMatrix(25, 9, seed);
    const PcaModel m = fitPca(x);
    EXPECT_LE(std::accumulate(m.explainedVariance.begin(), m.explainedVariance.end(), 0.0), totalVariance(x) * (1 + 1e-12));
  }
}

TEST(Pca, ProjectionsHaveZeroMean) {
  const Matrix x = testsupport::randomMatrix(50, 8, 11, 30.0);
  const PcaModel m = fitPca(x);
  const Matrix y = m.transform(x);
  for (double v : columnMeans(y)) EXPECT_NEAR(v, 0.0, 1e-8);
}

TEST(Pca, MeanMapsToZeroAndComponentsToUnitVectors) {
  const Matrix x = testsupport::randomMatrix(20, 7, 2);
  const PcaModel m = fitPca(x);
  Matrix means(3, 7);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 7; ++j) means(i, j) = m.mean[j];
  const Matrix projected = m.transform(means);
  for (double v : projected.data()) EXPECT_EQ(v, 0.0);

  Matrix basis(5, 7);
  for (std::size_t c = 0; c < 5; ++c)
    for (std::size_t j = 0; j < 7; ++j) basis(c, j) = m.components(c, j) + m.mean[j];
  EXPECT_LT(maxAbs(m.transform(basis) - Matrix::identity(5)), 1e-10);
}

TEST(Pca, TransformMatchesNaiveMultiply) {
  const Matrix x = testsupport::randomMatrix(30, 6, 5);
  const PcaModel m = fitPca(x);
  const Matrix y = testsupport::randomMatrix(12, 6, 6, 4.0);
  EXPECT_LT(maxAbs(transformPca(m, y) - naiveProject(y, m.mean, m.components)), 1e-10);
}

TEST(Pca, Errors) {
  EXPECT_THROW(fitPca(testsupport::randomMatrix(4, 8, 1)), Error);
  EXPECT_THROW(fitPca(testsupport::randomMatrix(10, 4, 1)), Error);
  const PcaModel m = fitPca(testsupport::randomMatrix(10, 6, 1));
  EXPECT_THROW(m.transform(Matrix(2, 5)), Error);
  EXPECT_THROW(m.inverseTransform(Matrix(2, 4)), Error);
}

TEST(Reduce, TransformsAreAffine) {
  const Matrix x = testsupport::randomMatrix(80, 8, 21);
  const PcaModel pca = fitPca(x);
  const IcaModel ica = fitIca(x, 5, 3);
  const Matrix a = testsupport::randomMatrix(1, 8, 22, 3.0);
  const Matrix b = testsupport::randomMatrix(1, 8, 23, 3.0);
  for (double alpha : {0.0, 0.3, 1.0, 2.5}) {
    Matrix mix(1, 8);
    for (std::size_t j = 0; j < 8; ++j) mix(0, j) = alpha * a(0, j) + (1 - alpha) * b(0, j);
    for (int which = 0; which < 2; ++which) {
      auto f = [&](const Matrix& v) { return which == 0 ? pca.transform(v) : ica.transform(v); };
      const Matrix fa = f(a);
      const Matrix fb = f(b);
      const Matrix fm = f(mix);
      for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(fm(0, c), alpha * fa(0, c) + (1 - alpha) * fb(0, c), 1e-8);
    }
  }
}

namespace {

// Three independent uniform sources mixed into five observed dimensions.
Matrix mixedSources(std::size_t n, Matrix* sources) {
  Rng rng(99);
  Matrix s(n, 3);
  for (double& v : s.data()) v = std::sqrt(3.0) * (2.0 * rng.uniform() - 1.0);
  const Matrix mixing = testsupport::randomMatrix(3, 5, 100);
  if (sources != nullptr) *sources = s;
  return s * mixing;
}

double correlation(const Matrix& a, std::size_t ca, const Matrix& b, std::size_t cb) {
  const double n = static_cast<double>(a.rows());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    ma += a(i, ca);
    mb += b(i, cb);
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    sab += (a(i, ca) - ma) * (b(i, cb) - mb);
    saa += (a(i, ca) - ma) * (a(i, ca) - ma);
    sbb += (b(i, cb) - mb) * (b(i, cb) - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(Ica, RecoversIndependentUniformSources) {
  Matrix s;
  const Matrix x = mixedSources(3000, &s);
  const IcaModel m = fitIca(x, 3, 1);
  ASSERT_TRUE(m.converged);
  const Matrix y = m.transform(x);
  // Exhaustive permutation matching over 3 sources.
  std::vector<std::size_t> perm = {0, 1, 2};
  double best = 0.0;
  do {
    double worst = 1.0;
    for (std::size_t c = 0; c < 3; ++c) worst = std::min(worst, std::abs(correlation(y, c, s, perm[c])));
    best = std::max(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  EXPECT_GE(best, 0.95);
}

TEST(Ica, UnmixingOrthogonalAndWhitenedOutputs) {
  const Matrix x = testsupport::randomMatrix(500, 8, 41) * testsupport::randomMatrix(8, 8, 42);
  Matrix skewed = x;
  for (double& v : skewed.data()) v = v * v * v;  // make sources non-Gaussian
  const IcaModel m = fitIca(skewed, 5, 7);
  if (m.converged) {
    EXPECT_LT(maxAbs(multiplyTransposed(m.unmixing, m.unmixing) - Matrix::identity(5)), 1e-6);
  }
  const Matrix cov = biasedCovariance(m.transform(skewed));
  EXPECT_LT(maxAbs(cov - Matrix::identity(5)), 1e-4);
  for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(cov(c, c), 1.0, 1e-6);
}

TEST(Ica, OneDimensional) {
  Matrix x(50, 1);
  Rng rng(3);
  for (double& v : x.data()) v = rng.uniform() * 4.0 + 1.0;
  const IcaModel m = fitIca(x, 1, 0);
  ASSERT_EQ(m.components.rows(), 1u);
  EXPECT_NE(m.components(0, 0), 0.0);
  const Matrix y = m.transform(x);
  // Output is an affine rescaling of the single axis.
  const double ratio = y(1, 0) / (x(1, 0) - m.mean[0]);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR(y(i, 0), ratio * (x(i, 0) - m.mean[0]), 1e-10);
}

TEST(Ica, DeterministicGivenSeed) {
  Matrix s;
  const Matrix x = mixedSources(400, &s);
  EXPECT_EQ(fitIca(x, 3, 5).unmixing, fitIca(x, 3, 5).unmixing);
  const IcaModel m = fitIca(x, 3, 5);
  EXPECT_EQ(m.transform(x), fitIca(x, 3, 5).transform(x));
}

TEST(Ica, TransformMatchesNaiveMultiplyAndZeroAtMean) {
  const Matrix x = testsupport::randomMatrix(100, 6, 9);
  const IcaModel m = fitIca(x, 5, 2);
  EXPECT_LT(maxAbs(m.components - m.unmixing * m.whitening), 1e-12);
  const Matrix y = testsupport::randomMatrix(7, 6, 10);
  EXPECT_LT(maxAbs(transformIca(m, y) - naiveProject(y, m.mean, m.components)), 1e-10);
  Matrix means(2, 6);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 6; ++j) means(i, j) = m.mean[j];
  const Matrix projected = m.transform(means);
  for (double v : projected.data()) EXPECT_EQ(v, 0.0);
}

TEST(Ica, NonConvergenceIsFlaggedNotThrown) {
  const Matrix x = testsupport::randomMatrix(200, 6, 12);  // Gaussian: no preferred rotation
  IcaOptions opt;
  opt.maxIterations = 2;
  opt.tolerance = 1e-14;
  const IcaModel m = fitIca(x, opt);
  EXPECT_FALSE(m.converged);
  EXPECT_EQ(m.iterations, 2);
  EXPECT_TRUE(m.components.allFinite());
}

TEST(Ica, Errors) {
  EXPECT_THROW(fitIca(testsupport::randomMatrix(3, 6, 1), 5, 0), Error);
  EXPECT_THROW(fitIca(lowRank(40, 6, 2, 1), 5, 0), Error);
  const IcaModel m = fitIca(testsupport::randomMatrix(40, 6, 1), 5, 0);
  EXPECT_THROW(m.transform(Matrix(1, 3)), Error);
}
