#pragma once

// Full-covariance Gaussian mixture fitted by EM, initialised from k-means.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "tacclust/cluster/assignment.hpp"
#include "tacclust/cluster/kmeans.hpp"
#include "tacclust/linalg.hpp"

namespace tacclust {

struct GmmParams {
  double tolerance = 1e-3;  // on the mean per-sample log-likelihood
  int maxIterations = 100;
  double regCovar = 1e-6;   // added to every covariance diagonal
  int initRestarts = 1;     // k-means restarts used for the initial partition
};

struct GmmModel {
  std::vector<double> weights;
  Matrix means;                      // k x d
  std::vector<Matrix> covariances;   // includes regCovar on the diagonal
  std::vector<Matrix> choleskyFactors;
};

struct GmmResult {
  GmmModel model;
  Matrix responsibilities;           // n x k
  std::vector<double> logLikelihood; // mean log-likelihood under each E-step's parameters
  bool converged = false;
};

namespace detail {

inline GmmModel gmmMStep(const Matrix& x, const Matrix& resp, double regCovar) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t k = resp.cols();
  GmmModel m;
  m.weights.assign(k, 0.0);
  m.means = Matrix(k, d);
  std::vector<double> nk(k, 10.0 * std::numeric_limits<double>::epsilon());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) {
      const double r = resp(i, c);
      nk[c] += r;
      auto mu = m.means.row(c);
      auto xi = x.row(i);
      for (std::size_t j = 0; j < d; ++j) mu[j] += r * xi[j];
    }
  for (std::size_t c = 0; c < k; ++c) {
    for (double& v : m.means.row(c)) v /= nk[c];
    m.weights[c] = nk[c] / static_cast<double>(n);
  }

  std::vector<double> diff(d);
  for (std::size_t c = 0; c < k; ++c) {
    Matrix cov(d, d);
    auto mu = m.means.row(c);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = resp(i, c);
      if (r == 0.0) continue;
      auto xi = x.row(i);
      for (std::size_t j = 0; j < d; ++j) diff[j] = xi[j] - mu[j];
      for (std::size_t p = 0; p < d; ++p) {
        const double rp = r * diff[p];
        auto row = cov.row(p);
        for (std::size_t q = p; q < d; ++q) row[q] += rp * diff[q];
      }
    }
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p; q < d; ++q) cov(q, p) = cov(p, q) = cov(p, q) / nk[c];
    try {
      m.choleskyFactors.push_back(choleskyWithJitter(cov, regCovar));
    } catch (const DegenerateCovariance&) {
      throw DegenerateCovariance("gmm: component " + std::to_string(c) +
                                 " has a singular covariance even after jitter");
    }
    for (std::size_t p = 0; p < d; ++p) cov(p, p) += regCovar;
    m.covariances.push_back(std::move(cov));
  }
  return m;
}

// Fills log-responsibilities and returns the mean log-likelihood.
inline double gmmEStep(const Matrix& x, const GmmModel& m, Matrix& resp) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t k = m.weights.size();
  std::vector<double> logNorm(k);
  for (std::size_t c = 0; c < k; ++c) {
    double logDet = 0.0;
    for (std::size_t j = 0; j < d; ++j) logDet += 2.0 * std::log(m.choleskyFactors[c](j, j));
    logNorm[c] = std::log(m.weights[c]) - 0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + logDet);
  }
  std::vector<double> diff(d);
  std::vector<double> logp(k);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      auto mu = m.means.row(c);
      for (std::size_t j = 0; j < d; ++j) diff[j] = xi[j] - mu[j];
      forwardSubstitute(m.choleskyFactors[c], diff);
      double maha = 0.0;
      for (double v : diff) maha += v * v;
      logp[c] = logNorm[c] - 0.5 * maha;
      mx = std::max(mx, logp[c]);
    }
    double s = 0.0;
    for (double v : logp) s += std::exp(v - mx);
    const double lse = mx + std::log(s);
    total += lse;
    for (std::size_t c = 0; c < k; ++c) resp(i, c) = std::exp(logp[c] - lse);
  }
  return total / static_cast<double>(n);
}

}  // namespace detail

/// EM from a k-means partition. Stops once the mean log-likelihood improves
/// by less than `tolerance` or after `maxIterations` M-steps.
inline GmmResult gmmFitModel(const Matrix& x, std::size_t k, std::uint64_t seed, const GmmParams& params = {}) {
  requireAtLeast(x, k, "gmm");
  KMeansParams init;
  init.restarts = params.initRestarts;
  const KMeansResult km = kmeansFit(x, k, seed, init);

  GmmResult r;
  r.responsibilities = Matrix(x.rows(), k);
  for (std::size_t i = 0; i < x.rows(); ++i) r.responsibilities(i, static_cast<std::size_t>(km.labels[i])) = 1.0;
  r.model = detail::gmmMStep(x, r.responsibilities, params.regCovar);

  double previous = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < params.maxIterations; ++it) {
    const double ll = detail::gmmEStep(x, r.model, r.responsibilities);
    r.logLikelihood.push_back(ll);
    if (std::abs(ll - previous) < params.tolerance) {
      r.converged = true;
      break;
    }
    previous = ll;
    r.model = detail::gmmMStep(x, r.responsibilities, params.regCovar);
  }
  if (!r.converged) r.logLikelihood.push_back(detail::gmmEStep(x, r.model, r.responsibilities));
  return r;
}

inline ClusterAssignment gmmFit(const Matrix& x, std::size_t k, std::uint64_t seed, const GmmParams& params = {}) {
  GmmResult r = gmmFitModel(x, k, seed, params);
  std::vector<int> raw(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = r.responsibilities.row(i);
    raw[i] = static_cast<int>(std::ranges::max_element(row) - row.begin());
  }
  ClusterAssignment a = makeAssignment(raw);
  a.memberships = std::move(r.responsibilities);
  a.objectiveTrace = std::move(r.logLikelihood);
  a.converged = r.converged;
  return a;
}

}  // namespace tacclust
