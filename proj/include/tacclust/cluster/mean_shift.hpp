#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "tacclust/cluster/assignment.hpp"

namespace tacclust {

struct MeanShiftParams {
  std::optional<double> bandwidth;  // estimated from the data when absent
  double quantile = 0.3;
  int maxIterations = 300;
  double stopFraction = 1e-3;  // stop when the shift is below this fraction of the bandwidth
};

/// Mean over all points of the distance to their ceil(quantile·n)-th nearest
/// neighbour, the point itself counted as the first.
inline double estimateBandwidth(const Matrix& x, double quantile = 0.3) {
  if (!(quantile > 0.0 && quantile <= 1.0)) throw Error("estimateBandwidth: quantile must lie in (0, 1]");
  const std::size_t n = x.rows();
  if (n == 0) return 0.0;
  const auto kth = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(n)));
  const std::size_t idx = std::clamp<std::size_t>(kth, 1, n) - 1;
  std::vector<double> d(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) d[j] = squaredDistance(x.row(i), x.row(j));
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(idx), d.end());
    total += std::sqrt(d[idx]);
  }
  return total / static_cast<double>(n);
}

struct MeanShiftResult {
  ClusterAssignment assignment;
  Matrix modes;  // one row per cluster id
  double bandwidth = 0.0;
};

/// Flat-kernel mean shift started from every point. Converged modes are ranked
/// by how many points lie within one bandwidth (ties: larger coordinates
/// first, compared lexicographically); a mode within one bandwidth of a better
/// ranked mode is dropped. Points take the label of their nearest mode.
inline MeanShiftResult meanShiftFit(const Matrix& x, const MeanShiftParams& params = {}) {
  const std::size_t n = x.rows();
  const std::size_t dims = x.cols();
  if (params.bandwidth && !(*params.bandwidth > 0.0)) throw Error("meanShift: bandwidth must be > 0");
  if (n == 0) throw Error("meanShift: empty input");
  const double bw = params.bandwidth ? *params.bandwidth : estimateBandwidth(x, params.quantile);
  if (bw == 0.0) {
    Matrix mode(1, dims);
    std::ranges::copy(x.row(0), mode.row(0).begin());
    return {makeAssignment(std::vector<int>(n, 0)), std::move(mode), 0.0};
  }
  const double bw2 = bw * bw;
  const double stop = params.stopFraction * bw;

  struct Mode {
    std::vector<double> center;
    std::size_t count;
  };
  std::vector<Mode> modes;
  std::vector<double> mean(dims);
  std::vector<double> next(dims);
  for (std::size_t s = 0; s < n; ++s) {
    std::ranges::copy(x.row(s), mean.begin());
    std::size_t inside = 0;
    for (int it = 0;; ++it) {
      std::ranges::fill(next, 0.0);
      inside = 0;
      for (std::size_t i = 0; i < n; ++i) {
        auto r = x.row(i);
        if (squaredDistance(r, mean) > bw2) continue;
        ++inside;
        for (std::size_t j = 0; j < dims; ++j) next[j] += r[j];
      }
      if (inside == 0) break;
      for (double& v : next) v /= static_cast<double>(inside);
      const double shift = std::sqrt(squaredDistance(next, mean));
      mean.swap(next);
      if (shift <= stop || it + 1 >= params.maxIterations) break;
    }
    if (inside > 0) modes.push_back({mean, inside});
  }

  std::ranges::stable_sort(modes, [](const Mode& a, const Mode& b) {
    if (a.count != b.count) return a.count > b.count;
    return std::ranges::lexicographical_compare(b.center, a.center);
  });
  std::vector<std::vector<double>> kept;
  for (const auto& m : modes) {
    bool near = false;
    for (const auto& k : kept)
      if (squaredDistance(k, m.center) <= bw2) {
        near = true;
        break;
      }
    if (!near) kept.push_back(m.center);
  }
  Matrix centers(kept.size(), dims);
  for (std::size_t c = 0; c < kept.size(); ++c) std::ranges::copy(kept[c], centers.row(c).begin());

  std::vector<int> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = static_cast<int>(nearestCenter(x.row(i), centers));
  MeanShiftResult out{makeAssignment(raw), Matrix(), bw};
  // Keep only modes that attracted at least one point, in cluster-id order.
  std::vector<std::size_t> used;
  for (std::size_t c = 0; c < centers.rows(); ++c)
    if (std::ranges::find(raw, static_cast<int>(c)) != raw.end()) used.push_back(c);
  out.modes = centers.selectRows(used);
  return out;
}

inline ClusterAssignment meanShift(const Matrix& x, const MeanShiftParams& params = {}) {
  return meanShiftFit(x, params).assignment;
}

}  // namespace tacclust
