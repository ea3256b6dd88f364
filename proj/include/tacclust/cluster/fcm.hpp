#pragma once

// Fuzzy c-means (Bezdek alternation).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tacclust/cluster/assignment.hpp"
#include "tacclust/rng.hpp"

namespace tacclust {

struct FcmParams {
  double fuzzifier = 2.0;
  double tolerance = 1e-4;  // on the largest membership change
  int maxIterations = 300;
};

/// Membership-weighted centroids: c_j = Σ u_ij^m x_i / Σ u_ij^m.
inline Matrix fcmCenters(const Matrix& x, const Matrix& u, double m) {
  const std::size_t k = u.cols();
  Matrix centers(k, x.cols());
  std::vector<double> weight(k, 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto xi = x.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      const double w = std::pow(u(i, c), m);
      weight[c] += w;
      auto cc = centers.row(c);
      for (std::size_t j = 0; j < x.cols(); ++j) cc[j] += w * xi[j];
    }
  }
  for (std::size_t c = 0; c < k; ++c)
    if (weight[c] > 0.0)
      for (double& v : centers.row(c)) v /= weight[c];
  return centers;
}

/// u_ij = 1 / Σ_l (d_ij / d_il)^(2/(m-1)). A point sitting exactly on a
/// centre gets membership 1 there (the lowest such centre) and 0 elsewhere.
inline Matrix fcmMemberships(const Matrix& x, const Matrix& centers, double m) {
  const std::size_t k = centers.rows();
  Matrix u(x.rows(), k);
  std::vector<double> d2(k);
  const double exponent = 1.0 / (m - 1.0);  // applied to squared distances
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::size_t zero = k;
    for (std::size_t c = 0; c < k; ++c) {
      d2[c] = squaredDistance(x.row(i), centers.row(c));
      if (d2[c] == 0.0 && zero == k) zero = c;
    }
    if (zero != k) {
      u(i, zero) = 1.0;
      continue;
    }
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += std::pow(d2[c] / d2[l], exponent);
      u(i, c) = 1.0 / s;
    }
  }
  return u;
}

/// Σ_ij u_ij^m ‖x_i − c_j‖²
inline double fcmObjective(const Matrix& x, const Matrix& u, const Matrix& centers, double m) {
  double j = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t c = 0; c < centers.rows(); ++c)
      j += std::pow(u(i, c), m) * squaredDistance(x.row(i), centers.row(c));
  return j;
}

struct FcmResult {
  Matrix centers;
  Matrix memberships;
  std::vector<double> objective;  // J(U_t, C_t) after each membership update
  int iterations = 0;
  bool converged = false;
};

inline FcmResult fcmFit(const Matrix& x, std::size_t k, std::uint64_t seed, const FcmParams& params = {}) {
  requireAtLeast(x, k, "fcm");
  if (!(params.fuzzifier > 1.0)) throw Error("fcm: fuzzifier must be > 1");
  Rng rng(seed);
  FcmResult r;
  r.memberships = Matrix(x.rows(), k);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = r.memberships.row(i);
    double s = 0.0;
    for (double& v : row) s += (v = rng.uniform() + 1e-12);
    for (double& v : row) v /= s;
  }
  for (int it = 0; it < params.maxIterations; ++it) {
    r.centers = fcmCenters(x, r.memberships, params.fuzzifier);
    Matrix next = fcmMemberships(x, r.centers, params.fuzzifier);
    double change = 0.0;
    auto a = next.data();
    auto b = r.memberships.data();
    for (std::size_t i = 0; i < a.size(); ++i) change = std::max(change, std::abs(a[i] - b[i]));
    r.memberships = std::move(next);
    r.objective.push_back(fcmObjective(x, r.memberships, r.centers, params.fuzzifier));
    r.iterations = it + 1;
    if (change < params.tolerance) {
      r.converged = true;
      break;
    }
  }
  return r;
}

inline ClusterAssignment fcm(const Matrix& x, std::size_t k, std::uint64_t seed, const FcmParams& params = {}) {
  FcmResult r = fcmFit(x, k, seed, params);
  std::vector<int> raw(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = r.memberships.row(i);
    raw[i] = static_cast<int>(std::ranges::max_element(row) - row.begin());
  }
  ClusterAssignment a = makeAssignment(raw);
  a.memberships = std::move(r.memberships);
  a.objectiveTrace = std::move(r.objective);
  a.converged = r.converged;
  return a;
}

}  // namespace tacclust
