#pragma once

// PCA and FastICA projections onto a handful of components. Both models are
// affine maps x -> (x - mean)·componentsᵀ; data is centred but not scaled.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "tacclust/error.hpp"
#include "tacclust/linalg.hpp"
#include "tacclust/matrix.hpp"
#include "tacclust/rng.hpp"

namespace tacclust {

inline constexpr std::size_t kDefaultComponents = 5;

namespace detail {

inline Matrix affineProject(const Matrix& x, const std::vector<double>& mean, const Matrix& components,
                            const char* who) {
  if (x.cols() != mean.size())
    throw Error(std::string(who) + ": input has " + std::to_string(x.cols()) + " columns, model expects " +
                std::to_string(mean.size()));
  Matrix out(x.rows(), components.rows());
  std::vector<double> row(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto xi = x.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) row[j] = xi[j] - mean[j];
    for (std::size_t c = 0; c < components.rows(); ++c) out(i, c) = dot(row, components.row(c));
  }
  return out;
}

}  // namespace detail

struct PcaModel {
  std::vector<double> mean;               // T
  Matrix components;                      // k x T, orthonormal rows
  std::vector<double> explainedVariance;  // k, nonincreasing

  Matrix transform(const Matrix& x) const { return detail::affineProject(x, mean, components, "transformPca"); }

  /// Maps projected coordinates back to the original space.
  Matrix inverseTransform(const Matrix& y) const {
    if (y.cols() != components.rows()) throw Error("inverseTransformPca: dimension mismatch");
    Matrix out = y * components;
    for (std::size_t i = 0; i < out.rows(); ++i)
      for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += mean[j];
    return out;
  }
};

inline PcaModel fitPca(const Matrix& x, std::size_t k = kDefaultComponents) {
  if (k == 0) throw Error("fitPca: k must be >= 1");
  if (x.rows() < k) throw Error("fitPca: need at least k = " + std::to_string(k) + " samples");
  if (x.cols() < k) throw Error("fitPca: need at least k = " + std::to_string(k) + " features");
  PcaModel model;
  model.mean = columnMeans(x);
  const Svd s = svd(centered(x, model.mean));
  model.components = Matrix(k, x.cols());
  model.explainedVariance.resize(k);
  const double dof = x.rows() > 1 ? static_cast<double>(x.rows() - 1) : 1.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::ranges::copy(s.vt.row(c), model.components.row(c).begin());
    model.explainedVariance[c] = s.singularValues[c] * s.singularValues[c] / dof;
  }
  return model;
}

inline Matrix transformPca(const PcaModel& model, const Matrix& x) { return model.transform(x); }

struct IcaModel {
  std::vector<double> mean;  // T
  Matrix whitening;          // k x T
  Matrix unmixing;           // k x k, orthogonal on convergence
  Matrix components;         // unmixing · whitening
  bool converged = false;
  int iterations = 0;

  Matrix transform(const Matrix& x) const { return detail::affineProject(x, mean, components, "transformIca"); }
};

struct IcaOptions {
  std::size_t components = kDefaultComponents;
  double tolerance = 1e-4;
  int maxIterations = 200;
  std::uint64_t seed = 0;
};

namespace detail {

// W <- (W Wᵀ)^(-1/2) W
inline Matrix symmetricDecorrelation(const Matrix& w) {
  const SymEigen eig = symmetricEigen(multiplyTransposed(w, w));
  const std::size_t k = w.rows();
  Matrix invSqrt(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < k; ++c)
        s += eig.vectors(i, c) * eig.vectors(j, c) / std::sqrt(std::max(eig.values[c], 1e-300));
      invSqrt(i, j) = s;
    }
  return invSqrt * w;
}

}  // namespace detail

/// Parallel FastICA with the logcosh contrast (g = tanh) on data whitened to
/// `components` dimensions. A run that hits the iteration cap returns the
/// iterate with the smallest update and converged = false.
inline IcaModel fitIca(const Matrix& x, const IcaOptions& opt = {}) {
  const std::size_t k = opt.components;
  if (k == 0) throw Error("fitIca: k must be >= 1");
  if (x.rows() < k) throw Error("fitIca: need at least k = " + std::to_string(k) + " samples");
  if (x.cols() < k) throw Error("fitIca: need at least k = " + std::to_string(k) + " features");
  const std::size_t n = x.rows();

  IcaModel model;
  model.mean = columnMeans(x);
  const Matrix xc = centered(x, model.mean);
  const Svd s = svd(xc);
  const double smax = s.singularValues.empty() ? 0.0 : s.singularValues[0];
  model.whitening = Matrix(k, x.cols());
  for (std::size_t c = 0; c < k; ++c) {
    if (!(s.singularValues[c] > 1e-10 * smax))
      throw Error("fitIca: data rank is below the requested " + std::to_string(k) + " components");
    const double scale = std::sqrt(static_cast<double>(n)) / s.singularValues[c];
    for (std::size_t j = 0; j < x.cols(); ++j) model.whitening(c, j) = scale * s.vt(c, j);
  }
  const Matrix z = multiplyTransposed(xc, model.whitening);  // n x k, identity covariance

  Rng rng(opt.seed);
  Matrix w(k, k);
  for (double& v : w.data()) v = rng.gaussian();
  w = detail::symmetricDecorrelation(w);

  Matrix best = w;
  double bestLim = std::numeric_limits<double>::infinity();
  std::vector<double> y(k);
  const double invN = 1.0 / static_cast<double>(n);
  for (int it = 1; it <= opt.maxIterations; ++it) {
    Matrix gz(k, k);
    std::vector<double> gPrimeMean(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto zi = z.row(i);
      for (std::size_t r = 0; r < k; ++r) y[r] = std::tanh(dot(w.row(r), zi));
      for (std::size_t r = 0; r < k; ++r) {
        gPrimeMean[r] += 1.0 - y[r] * y[r];
        for (std::size_t c = 0; c < k; ++c) gz(r, c) += y[r] * zi[c];
      }
    }
    Matrix next(k, k);
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t c = 0; c < k; ++c) next(r, c) = gz(r, c) * invN - gPrimeMean[r] * invN * w(r, c);
    next = detail::symmetricDecorrelation(next);

    double lim = 0.0;
    for (std::size_t r = 0; r < k; ++r) lim = std::max(lim, std::abs(std::abs(dot(next.row(r), w.row(r))) - 1.0));
    w = std::move(next);
    model.iterations = it;
    if (lim < bestLim) {
      bestLim = lim;
      best = w;
    }
    if (lim < opt.tolerance) {
      model.converged = true;
      break;
    }
  }
  model.unmixing = model.converged ? w : best;
  model.components = model.unmixing * model.whitening;
  return model;
}

inline IcaModel fitIca(const Matrix& x, std::size_t k, std::uint64_t seed) {
  IcaOptions opt;
  opt.components = k;
  opt.seed = seed;
  return fitIca(x, opt);
}

inline Matrix transformIca(const IcaModel& model, const Matrix& x) { return model.transform(x); }

}  // namespace tacclust
