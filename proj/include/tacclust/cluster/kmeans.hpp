#pragma once

// Lloyd k-means with greedy k-means++ seeding, and Sculley-style mini-batch
// k-means with per-centre learning rate 1/count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "tacclust/cluster/assignment.hpp"
#include "tacclust/matrix.hpp"
#include "tacclust/rng.hpp"

namespace tacclust {

struct KMeansParams {
  int restarts = 10;
  int maxIterations = 300;
  double tolerance = 1e-4;  // relative to the mean per-feature variance
};

struct KMeansResult {
  Matrix centers;
  std::vector<int> labels;
  double inertia = 0.0;
  std::vector<double> inertiaTrace;  // inertia after each assignment step
  int iterations = 0;
};

namespace detail {

inline double meanFeatureVariance(const Matrix& x) {
  if (x.rows() == 0) return 0.0;
  const auto mean = columnMeans(x);
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) total += squaredDistance(x.row(i), mean);
  return total / static_cast<double>(x.rows() * std::max<std::size_t>(x.cols(), 1));
}

// Index of the first entry whose running sum exceeds `target`.
inline std::size_t searchCumulative(const std::vector<double>& cumulative, double target) {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

}  // namespace detail

/// Greedy k-means++: each new centre is the best (lowest potential) of
/// 2 + floor(ln k) candidates drawn proportional to squared distance.
inline Matrix kmeansPlusPlus(const Matrix& x, std::size_t k, Rng& rng) {
  requireAtLeast(x, k, "kmeansPlusPlus");
  const std::size_t n = x.rows();
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  Matrix centers(k, x.cols());
  std::vector<std::uint8_t> chosen(n, 0);

  std::size_t first = rng.below(n);
  std::ranges::copy(x.row(first), centers.row(0).begin());
  chosen[first] = 1;
  std::vector<double> closest(n);
  for (std::size_t i = 0; i < n; ++i) closest[i] = squaredDistance(x.row(i), centers.row(0));
  double potential = std::accumulate(closest.begin(), closest.end(), 0.0);

  std::vector<double> cumulative(n);
  std::vector<double> candidateDist(n);
  std::vector<double> bestDist(n);
  for (std::size_t c = 1; c < k; ++c) {
    std::size_t bestCandidate = n;
    if (potential <= 0.0) {
      // Every point coincides with a centre; take the first unused point.
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) {
          bestCandidate = i;
          break;
        }
      for (std::size_t i = 0; i < n; ++i) bestDist[i] = 0.0;
    } else {
      std::partial_sum(closest.begin(), closest.end(), cumulative.begin());
      double bestPotential = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t cand = detail::searchCumulative(cumulative, rng.uniform() * potential);
        double pot = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          candidateDist[i] = std::min(closest[i], squaredDistance(x.row(i), x.row(cand)));
          pot += candidateDist[i];
        }
        if (pot < bestPotential) {
          bestPotential = pot;
          bestCandidate = cand;
          bestDist.swap(candidateDist);
        }
      }
      potential = bestPotential;
    }
    chosen[bestCandidate] = 1;
    std::ranges::copy(x.row(bestCandidate), centers.row(c).begin());
    closest = bestDist;
  }
  return centers;
}

/// Lloyd iterations from the given centres. Empty clusters are reseeded at
/// the point farthest from its own centroid.
inline KMeansResult lloyd(const Matrix& x, Matrix centers, const KMeansParams& params, double absTolerance) {
  const std::size_t n = x.rows();
  const std::size_t k = centers.rows();
  const std::size_t d = x.cols();
  KMeansResult r;
  r.labels.assign(n, 0);
  std::vector<double> dist(n);
  std::vector<std::size_t> counts(k);
  Matrix sums(k, d);

  auto assign = [&] {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      r.labels[i] = static_cast<int>(nearestCenter(x.row(i), centers, &dist[i]));
      inertia += dist[i];
    }
    return inertia;
  };

  for (int it = 0; it < params.maxIterations; ++it) {
    r.inertiaTrace.push_back(assign());
    r.iterations = it + 1;

    std::ranges::fill(counts, 0);
    for (int l : r.labels) ++counts[static_cast<std::size_t>(l)];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (counts[static_cast<std::size_t>(r.labels[i])] > 1 && (far == n || dist[i] > dist[far])) far = i;
      if (far == n) break;
      --counts[static_cast<std::size_t>(r.labels[far])];
      r.labels[far] = static_cast<int>(c);
      counts[c] = 1;
      dist[far] = 0.0;
    }

    std::ranges::fill(sums.data(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto s = sums.row(static_cast<std::size_t>(r.labels[i]));
      auto xi = x.row(i);
      for (std::size_t j = 0; j < d; ++j) s[j] += xi[j];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      auto cc = centers.row(c);
      auto s = sums.row(c);
      for (std::size_t j = 0; j < d; ++j) {
        const double v = s[j] / static_cast<double>(counts[c]);
        shift += (v - cc[j]) * (v - cc[j]);
        cc[j] = v;
      }
    }
    if (shift <= absTolerance) break;
  }
  r.inertia = assign();
  r.inertiaTrace.push_back(r.inertia);
  r.centers = std::move(centers);
  return r;
}

/// Best-of-`restarts` Lloyd k-means.
inline KMeansResult kmeansFit(const Matrix& x, std::size_t k, std::uint64_t seed, const KMeansParams& params = {}) {
  requireAtLeast(x, k, "kmeans");
  Rng rng(seed);
  const double tol = params.tolerance * detail::meanFeatureVariance(x);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, params.restarts); ++r) {
    KMeansResult run = lloyd(x, kmeansPlusPlus(x, k, rng), params, tol);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

inline ClusterAssignment kmeans(const Matrix& x, std::size_t k, std::uint64_t seed, const KMeansParams& params = {}) {
  KMeansResult r = kmeansFit(x, k, seed, params);
  ClusterAssignment a = makeAssignment(r.labels);
  a.objectiveTrace = std::move(r.inertiaTrace);
  return a;
}

struct MiniBatchParams {
  std::size_t batchSize = 1024;
  int maxEpochs = 100;
  int restarts = 3;
  int maxNoImprovement = 10;  // steps without a better smoothed batch inertia
  double tolerance = 0.0;     // centre-shift stop, relative; 0 disables
};

struct MiniBatchResult {
  Matrix centers;
  std::vector<int> labels;
  double inertia = 0.0;
  int steps = 0;
};

/// Streams batches over the data starting from `centers`. A batch of at least
/// n points always uses every row in order, so the run is then independent of
/// the random stream.
inline MiniBatchResult miniBatchKmeansFromCenters(const Matrix& x, Matrix centers, const MiniBatchParams& params,
                                                  Rng& rng) {
  const std::size_t n = x.rows();
  const std::size_t k = centers.rows();
  const std::size_t d = x.cols();
  const bool fullBatch = params.batchSize >= n;
  const std::size_t batch = fullBatch ? n : params.batchSize;
  const std::size_t stepsPerEpoch = (n + batch - 1) / batch;
  const std::size_t maxSteps = static_cast<std::size_t>(std::max(1, params.maxEpochs)) * stepsPerEpoch;
  const double tol = params.tolerance * detail::meanFeatureVariance(x);

  std::vector<double> counts(k, 0.0);
  std::vector<std::size_t> idx(batch);
  std::vector<int> batchLabels(batch);
  Matrix sums(k, d);
  std::vector<double> batchCounts(k);
  double ewa = 0.0;
  double bestEwa = std::numeric_limits<double>::infinity();
  int noImprovement = 0;

  MiniBatchResult r;
  for (std::size_t step = 0; step < maxSteps; ++step) {
    for (std::size_t b = 0; b < batch; ++b) idx[b] = fullBatch ? b : static_cast<std::size_t>(rng.below(n));

    double batchInertia = 0.0;
    std::ranges::fill(sums.data(), 0.0);
    std::ranges::fill(batchCounts, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      double dd = 0.0;
      const std::size_t c = nearestCenter(x.row(idx[b]), centers, &dd);
      batchInertia += dd;
      batchCounts[c] += 1.0;
      auto s = sums.row(c);
      auto xi = x.row(idx[b]);
      for (std::size_t j = 0; j < d; ++j) s[j] += xi[j];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (batchCounts[c] == 0.0) continue;
      const double total = counts[c] + batchCounts[c];
      auto cc = centers.row(c);
      auto s = sums.row(c);
      for (std::size_t j = 0; j < d; ++j) {
        const double v = (cc[j] * counts[c] + s[j]) / total;
        shift += (v - cc[j]) * (v - cc[j]);
        cc[j] = v;
      }
      counts[c] = total;
    }
    r.steps = static_cast<int>(step + 1);

    if (tol > 0.0 && shift <= tol) break;
    batchInertia /= static_cast<double>(batch);
    const double alpha = std::min(1.0, 2.0 * static_cast<double>(batch) / static_cast<double>(n + 1));
    ewa = step == 0 ? batchInertia : ewa * (1.0 - alpha) + batchInertia * alpha;
    if (ewa < bestEwa) {
      bestEwa = ewa;
      noImprovement = 0;
    } else if (++noImprovement >= params.maxNoImprovement) {
      break;
    }
  }

  r.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double dd = 0.0;
    r.labels[i] = static_cast<int>(nearestCenter(x.row(i), centers, &dd));
    r.inertia += dd;
  }
  r.centers = std::move(centers);
  return r;
}

/// Initial centres: best of `restarts` k-means++ runs on a random subset of
/// min(n, 3·batch) rows, judged by inertia on that subset.
inline Matrix miniBatchInit(const Matrix& x, std::size_t k, const MiniBatchParams& params, Rng& rng) {
  const std::size_t n = x.rows();
  const std::size_t initSize = std::max(k, std::min(n, 3 * params.batchSize));
  Matrix best;
  double bestInertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, params.restarts); ++r) {
    std::vector<std::size_t> idx(initSize);
    if (initSize >= n)
      std::iota(idx.begin(), idx.end(), 0);
    else
      for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
    const Matrix subset = x.selectRows(idx);
    Matrix centers = kmeansPlusPlus(subset, k, rng);
    double inertia = 0.0;
    for (std::size_t i = 0; i < subset.rows(); ++i) {
      double dd = 0.0;
      nearestCenter(subset.row(i), centers, &dd);
      inertia += dd;
    }
    if (inertia < bestInertia) {
      bestInertia = inertia;
      best = std::move(centers);
    }
  }
  return best;
}

inline ClusterAssignment miniBatchKmeans(const Matrix& x, std::size_t k, std::uint64_t seed,
                                         const MiniBatchParams& params = {}) {
  requireAtLeast(x, k, "miniBatchKmeans");
  Rng rng(seed);
  Matrix init = miniBatchInit(x, k, params, rng);
  MiniBatchResult r = miniBatchKmeansFromCenters(x, std::move(init), params, rng);
  ClusterAssignment a = makeAssignment(r.labels);
  a.objectiveTrace = {r.inertia};
  return a;
}

}  // namespace tacclust
