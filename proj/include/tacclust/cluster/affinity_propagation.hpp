#pragma once

// Affinity propagation on similarities s(i,k) = −‖x_i − x_k‖² with damped
// responsibility/availability updates.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "tacclust/cluster/assignment.hpp"
#include "tacclust/rng.hpp"

namespace tacclust {

struct AffinityPropagationParams {
  double damping = 0.5;
  int maxIterations = 200;
  int convergenceIterations = 15;
  std::optional<double> preference;  // median off-diagonal similarity when absent
};

namespace detail {

inline double medianOffDiagonal(const Matrix& s) {
  const std::size_t n = s.rows();
  std::vector<double> v;
  v.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) v.push_back(s(i, j));
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace detail

struct AffinityPropagationResult {
  ClusterAssignment assignment;
  std::vector<std::size_t> exemplars;  // point index of each cluster's exemplar, by cluster id
};

/// Runs until the exemplar set has been unchanged for `convergenceIterations`
/// iterations. Without convergence the current exemplars are still used for
/// labelling and the result carries converged = false; with no exemplar at
/// all every point is noise. A tiny seeded perturbation of the similarities
/// breaks ties between equivalent exemplars.
inline AffinityPropagationResult affinityPropagationFit(const Matrix& x, std::uint64_t seed,
                                                       const AffinityPropagationParams& params = {}) {
  if (!(params.damping >= 0.5 && params.damping < 1.0)) throw Error("affinityPropagation: damping must lie in [0.5, 1)");
  if (params.maxIterations < 1 || params.convergenceIterations < 1)
    throw Error("affinityPropagation: iteration counts must be >= 1");
  const std::size_t n = x.rows();
  if (n == 0) throw Error("affinityPropagation: empty input");
  if (n == 1) return {makeAssignment({0}), {0}};

  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s(i, j) = s(j, i) = -squaredDistance(x.row(i), x.row(j));
  const double pref = params.preference ? *params.preference : detail::medianOffDiagonal(s);
  for (std::size_t i = 0; i < n; ++i) s(i, i) = pref;
  {
    Rng rng(seed);
    const double eps = std::numeric_limits<double>::epsilon();
    const double tiny = std::numeric_limits<double>::min();
    for (double& v : s.data()) v += (eps * v + tiny * 100.0) * rng.gaussian();
  }

  const double d = params.damping;
  Matrix r(n, n, 0.0);
  Matrix a(n, n, 0.0);
  std::vector<double> colSum(n);
  std::vector<std::uint8_t> exemplar(n, 0);
  std::vector<int> stableRun(n, 0);
  bool converged = false;

  for (int it = 0; it < params.maxIterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      auto si = s.row(i);
      auto ai = a.row(i);
      auto ri = r.row(i);
      std::size_t arg = 0;
      double first = -std::numeric_limits<double>::infinity();
      double second = first;
      for (std::size_t k = 0; k < n; ++k) {
        const double v = ai[k] + si[k];
        if (v > first) {
          second = first;
          first = v;
          arg = k;
        } else if (v > second) {
          second = v;
        }
      }
      for (std::size_t k = 0; k < n; ++k) {
        const double target = si[k] - (k == arg ? second : first);
        ri[k] = d * ri[k] + (1.0 - d) * target;
      }
    }

    std::ranges::fill(colSum, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto ri = r.row(i);
      for (std::size_t k = 0; k < n; ++k) colSum[k] += k == i ? ri[k] : std::max(ri[k], 0.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto ri = r.row(i);
      auto ai = a.row(i);
      for (std::size_t k = 0; k < n; ++k) {
        const double target = k == i ? colSum[k] - ri[k] : std::min(0.0, colSum[k] - std::max(ri[k], 0.0));
        ai[k] = d * ai[k] + (1.0 - d) * target;
      }
    }

    std::size_t count = 0;
    bool allStable = true;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t e = (a(i, i) + r(i, i)) > 0.0 ? 1 : 0;
      stableRun[i] = (it == 0 || e != exemplar[i]) ? 1 : stableRun[i] + 1;
      exemplar[i] = e;
      count += e;
      allStable = allStable && stableRun[i] >= params.convergenceIterations;
    }
    if (it >= params.convergenceIterations && allStable && count > 0) {
      converged = true;
      break;
    }
  }

  std::vector<std::size_t> centers;
  for (std::size_t i = 0; i < n; ++i)
    if (exemplar[i]) centers.push_back(i);

  AffinityPropagationResult out;
  if (centers.empty()) {
    out.assignment = makeAssignment(std::vector<int>(n, kNoise));
    out.assignment.converged = false;
    return out;
  }

  auto assign = [&](const std::vector<std::size_t>& ex) {
    std::vector<std::size_t> c(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      for (std::size_t e = 1; e < ex.size(); ++e)
        if (s(i, ex[e]) > s(i, ex[best])) best = e;
      c[i] = best;
    }
    for (std::size_t e = 0; e < ex.size(); ++e) c[ex[e]] = e;
    return c;
  };

  // Refine: each cluster's exemplar becomes its member with the largest total
  // similarity to the other members.
  std::vector<std::size_t> c = assign(centers);
  std::vector<std::vector<std::size_t>> members(centers.size());
  for (std::size_t i = 0; i < n; ++i) members[c[i]].push_back(i);
  for (std::size_t e = 0; e < centers.size(); ++e) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j : members[e]) {
      double total = 0.0;
      for (std::size_t i : members[e]) total += s(i, j);
      if (total > best) {
        best = total;
        centers[e] = j;
      }
    }
  }
  c = assign(centers);

  std::vector<int> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = static_cast<int>(centers[c[i]]);
  out.assignment = makeAssignment(raw);
  out.assignment.converged = converged;
  out.exemplars = centers;
  std::ranges::sort(out.exemplars);
  return out;
}

inline ClusterAssignment affinityPropagation(const Matrix& x, std::uint64_t seed,
                                             const AffinityPropagationParams& params = {}) {
  return affinityPropagationFit(x, seed, params).assignment;
}

}  // namespace tacclust
