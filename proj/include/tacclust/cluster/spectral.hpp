#pragma once

// Spectral clustering on an RBF affinity with the symmetric normalized
// Laplacian L = I − D^(-1/2) W D^(-1/2), row-normalized embedding, then k-means.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tacclust/cluster/assignment.hpp"
#include "tacclust/cluster/kmeans.hpp"
#include "tacclust/linalg.hpp"
#include "tacclust/rng.hpp"

namespace tacclust {

struct SpectralParams {
  double gamma = 1.0;
  int kmeansRestarts = 10;
  std::size_t denseLimit = 300;  // above this size the iterative eigensolver is used
  double eigenTolerance = 1e-8;
  int maxRestarts = 200;
};

/// W_ij = exp(−gamma·‖x_i − x_j‖²), unit diagonal.
inline Matrix rbfAffinity(const Matrix& x, double gamma) {
  const std::size_t n = x.rows();
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    w(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) w(i, j) = w(j, i) = std::exp(-gamma * squaredDistance(x.row(i), x.row(j)));
  }
  return w;
}

/// D^(-1/2) with an isolated vertex (zero degree) treated as degree 1.
inline std::vector<double> inverseSqrtDegrees(const Matrix& w) {
  std::vector<double> out(w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double deg = 0.0;
    for (double v : w.row(i)) deg += v;
    out[i] = 1.0 / std::sqrt(deg > 0.0 ? deg : 1.0);
  }
  return out;
}

inline Matrix normalizedLaplacian(const Matrix& w) {
  if (w.rows() != w.cols()) throw Error("normalizedLaplacian: affinity is not square");
  const auto dinv = inverseSqrtDegrees(w);
  Matrix l(w.rows(), w.cols());
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) l(i, j) = (i == j ? 1.0 : 0.0) - dinv[i] * w(i, j) * dinv[j];
  return l;
}

namespace detail {

using Column = std::vector<double>;

// Orthonormalizes `v` against `basis` (two passes); false if nothing is left.
inline bool orthonormalizeAgainst(Column& v, const std::vector<Column>& basis) {
  const double before = std::sqrt(dot(v, v));
  if (before == 0.0) return false;
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : basis) {
      const double p = dot(q, v);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * q[i];
    }
  const double after = std::sqrt(dot(v, v));
  if (after <= 1e-10 * before) return false;
  for (double& x : v) x /= after;
  return true;
}

// B·V for B = (I + D^(-1/2) W D^(-1/2)) / 2, whose top eigenvectors are the
// bottom eigenvectors of the normalized Laplacian.
inline std::vector<Column> applyShiftedOperator(const Matrix& w, const std::vector<double>& dinv,
                                                const std::vector<Column>& block) {
  const std::size_t n = w.rows();
  const std::size_t b = block.size();
  std::vector<double> scaled(n * b);  // row-major n x b
  for (std::size_t c = 0; c < b; ++c)
    for (std::size_t i = 0; i < n; ++i) scaled[i * b + c] = dinv[i] * block[c][i];
  std::vector<Column> out(b, Column(n));
  std::vector<double> acc(b);
  for (std::size_t i = 0; i < n; ++i) {
    std::ranges::fill(acc, 0.0);
    auto wi = w.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double wij = wi[j];
      if (wij == 0.0) continue;
      const double* s = &scaled[j * b];
      for (std::size_t c = 0; c < b; ++c) acc[c] += wij * s[c];
    }
    for (std::size_t c = 0; c < b; ++c) out[c][i] = 0.5 * (block[c][i] + dinv[i] * acc[c]);
  }
  return out;
}

// Restarted block Krylov iteration with Rayleigh-Ritz extraction.
inline std::vector<Column> topEigenvectorsShifted(const Matrix& w, std::size_t k, std::uint64_t seed,
                                                  const SpectralParams& params) {
  const std::size_t n = w.rows();
  const auto dinv = inverseSqrtDegrees(w);
  const std::size_t blockSize = std::min(n, k + 8);
  constexpr int kDepth = 4;

  Rng rng(seed);
  std::vector<Column> start;
  while (start.size() < blockSize) {
    Column v(n);
    for (double& x : v) x = rng.gaussian();
    if (orthonormalizeAgainst(v, start)) start.push_back(std::move(v));
  }

  std::vector<Column> ritz;
  for (int restart = 0; restart < params.maxRestarts; ++restart) {
    std::vector<Column> q = start;
    std::vector<Column> bq;
    std::vector<Column> last = start;
    for (int s = 0; s <= kDepth && !last.empty(); ++s) {
      auto products = applyShiftedOperator(w, dinv, last);
      bq.insert(bq.end(), products.begin(), products.end());
      if (s == kDepth) break;
      last.clear();
      for (auto& p : products) {
        Column v = p;
        if (orthonormalizeAgainst(v, q)) {
          q.push_back(v);
          last.push_back(std::move(v));
        }
      }
    }
    const std::size_t m = q.size();
    Matrix h(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i; j < m; ++j) h(i, j) = h(j, i) = 0.5 * (dot(q[i], bq[j]) + dot(q[j], bq[i]));
    const SymEigen eig = symmetricEigen(h);

    ritz.assign(blockSize, Column(n, 0.0));
    double worst = 0.0;
    Column bu(n);
    for (std::size_t c = 0; c < blockSize && c < m; ++c) {
      std::ranges::fill(bu, 0.0);
      for (std::size_t j = 0; j < m; ++j) {
        const double y = eig.vectors(j, c);
        for (std::size_t i = 0; i < n; ++i) {
          ritz[c][i] += y * q[j][i];
          bu[i] += y * bq[j][i];
        }
      }
      if (c < k) {
        double r = 0.0;
        for (std::size_t i = 0; i < n; ++i) r += (bu[i] - eig.values[c] * ritz[c][i]) * (bu[i] - eig.values[c] * ritz[c][i]);
        worst = std::max(worst, std::sqrt(r));
      }
    }
    if (worst <= params.eigenTolerance) break;
    start.clear();
    for (auto& v : ritz)
      if (orthonormalizeAgainst(v, start)) start.push_back(v);
    while (start.size() < blockSize) {
      Column v(n);
      for (double& x : v) x = rng.gaussian();
      if (orthonormalizeAgainst(v, start)) start.push_back(std::move(v));
    }
  }
  ritz.resize(k);
  return ritz;
}

}  // namespace detail

/// n x k matrix whose columns are eigenvectors of the normalized Laplacian for
/// its k smallest eigenvalues (ascending).
inline Matrix spectralEmbedding(const Matrix& w, std::size_t k, std::uint64_t seed, const SpectralParams& params = {}) {
  const std::size_t n = w.rows();
  Matrix emb(n, k);
  if (n <= params.denseLimit) {
    const SymEigen eig = symmetricEigen(normalizedLaplacian(w));
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t i = 0; i < n; ++i) emb(i, c) = eig.vectors(i, n - 1 - c);
    return emb;
  }
  const auto vecs = detail::topEigenvectorsShifted(w, k, seed, params);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t i = 0; i < n; ++i) emb(i, c) = vecs[c][i];
  return emb;
}

inline ClusterAssignment spectralFromAffinity(const Matrix& w, std::size_t k, std::uint64_t seed,
                                              const SpectralParams& params = {}) {
  if (k == 0 || w.rows() < k) throw Error("spectral: n is smaller than k");
  Matrix emb = spectralEmbedding(w, k, mixSeed(seed, 1), params);
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    auto r = emb.row(i);
    const double nrm = std::sqrt(dot(r, r));
    if (nrm > 0.0)
      for (double& v : r) v /= nrm;
  }
  KMeansParams km;
  km.restarts = params.kmeansRestarts;
  return kmeans(emb, k, mixSeed(seed, 2), km);
}

inline ClusterAssignment spectral(const Matrix& x, std::size_t k, std::uint64_t seed, const SpectralParams& params = {}) {
  requireAtLeast(x, k, "spectral");
  return spectralFromAffinity(rbfAffinity(x, params.gamma), k, seed, params);
}

}  // namespace tacclust
