#pragma once

// OPTICS ordering with unbounded max-eps, and xi-steep cluster extraction
// (steep down/up areas, predecessor correction).

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tacclust/cluster/assignment.hpp"

namespace tacclust {

struct OpticsParams {
  std::size_t minPts = 5;
  double xi = 0.05;
  std::size_t minClusterSize = 0;  // 0: use minPts
  bool predecessorCorrection = true;
};

struct OpticsResult {
  std::vector<std::size_t> ordering;
  std::vector<double> reachability;   // by point index; inf for the first point of each component
  std::vector<double> coreDistance;   // by point index; inf when fewer than minPts points exist
  std::vector<long> predecessor;      // by point index; -1 when none
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Core distance is the distance to the minPts-th nearest point, counting the
/// point itself. The next point processed is the unprocessed one with the
/// smallest reachability, lowest index on ties.
inline OpticsResult opticsOrdering(const Matrix& x, std::size_t minPts) {
  const std::size_t n = x.rows();
  OpticsResult r;
  r.coreDistance.assign(n, kInf);
  r.reachability.assign(n, kInf);
  r.predecessor.assign(n, -1);
  r.ordering.reserve(n);

  if (minPts <= n) {
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) d[j] = squaredDistance(x.row(i), x.row(j));
      std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(minPts - 1), d.end());
      r.coreDistance[i] = std::sqrt(d[minPts - 1]);
    }
  }

  std::vector<std::uint8_t> processed(n, 0);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t p = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!processed[i] && (p == n || r.reachability[i] < r.reachability[p])) p = i;
    processed[p] = 1;
    r.ordering.push_back(p);
    if (std::isinf(r.coreDistance[p])) continue;
    for (std::size_t o = 0; o < n; ++o) {
      if (processed[o]) continue;
      const double reach = std::max(r.coreDistance[p], std::sqrt(squaredDistance(x.row(p), x.row(o))));
      if (reach < r.reachability[o]) {
        r.reachability[o] = reach;
        r.predecessor[o] = static_cast<long>(p);
      }
    }
  }
  return r;
}

namespace detail {

struct SteepDownArea {
  std::size_t start;
  std::size_t end;
  double mib;
};

// Extends a steep region from `start`: at most minPts consecutive points that
// are neither steep nor moving the other way are allowed inside it.
inline std::size_t extendRegion(const std::vector<std::uint8_t>& steep, const std::vector<std::uint8_t>& otherWay,
                                std::size_t start, std::size_t minPts) {
  std::size_t nonSteep = 0;
  std::size_t end = start;
  for (std::size_t i = start; i < steep.size(); ++i) {
    if (steep[i]) {
      nonSteep = 0;
      end = i;
    } else if (!otherWay[i]) {
      if (++nonSteep > minPts) break;
    } else {
      return end;
    }
  }
  return end;
}

inline std::vector<SteepDownArea> filterSteepDownAreas(const std::vector<SteepDownArea>& sdas, double mib,
                                                       double xiComplement, const std::vector<double>& plot) {
  if (std::isinf(mib)) return {};
  std::vector<SteepDownArea> out;
  for (auto s : sdas)
    if (mib <= plot[s.start] * xiComplement) {
      s.mib = std::max(s.mib, mib);
      out.push_back(s);
    }
  return out;
}

inline bool correctPredecessor(const std::vector<double>& plot, const std::vector<long>& predecessorPlot,
                               const std::vector<std::size_t>& ordering, std::size_t& s, std::size_t& e) {
  while (s < e) {
    if (plot[s] > plot[e]) return true;
    const long pe = predecessorPlot[e];
    for (std::size_t i = s; i < e; ++i)
      if (pe == static_cast<long>(ordering[i])) return true;
    --e;
  }
  return false;
}

}  // namespace detail

/// Clusters as [start, end] ranges of the ordering, smaller (nested) ranges
/// first within each steep-up area.
inline std::vector<std::pair<std::size_t, std::size_t>> opticsXiClusters(const OpticsResult& r, std::size_t minPts,
                                                                         double xi, std::size_t minClusterSize,
                                                                         bool predecessorCorrection) {
  const std::size_t n = r.ordering.size();
  std::vector<double> plot(n + 1);
  std::vector<long> predPlot(n);
  for (std::size_t i = 0; i < n; ++i) {
    plot[i] = r.reachability[r.ordering[i]];
    predPlot[i] = r.predecessor[r.ordering[i]];
  }
  plot[n] = kInf;
  const double xiComplement = 1.0 - xi;

  // NaN ratios (inf/inf) compare false everywhere.
  std::vector<std::uint8_t> steepUp(n), steepDown(n), down(n), up(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = plot[i] / plot[i + 1];
    steepUp[i] = ratio <= xiComplement;
    steepDown[i] = ratio >= 1.0 / xiComplement;
    down[i] = ratio > 1.0;
    up[i] = ratio < 1.0;
  }

  std::vector<detail::SteepDownArea> sdas;
  std::vector<std::pair<std::size_t, std::size_t>> clusters;
  std::size_t index = 0;
  double mib = 0.0;
  for (std::size_t steep = 0; steep < n; ++steep) {
    if (!(steepUp[steep] || steepDown[steep]) || steep < index) continue;
    for (std::size_t i = index; i <= steep; ++i) mib = std::max(mib, plot[i]);

    if (steepDown[steep]) {
      sdas = detail::filterSteepDownAreas(sdas, mib, xiComplement, plot);
      const std::size_t dEnd = detail::extendRegion(steepDown, up, steep, minPts);
      sdas.push_back({steep, dEnd, 0.0});
      index = dEnd + 1;
      mib = plot[index];
      continue;
    }

    sdas = detail::filterSteepDownAreas(sdas, mib, xiComplement, plot);
    const std::size_t uStart = steep;
    const std::size_t uEnd = detail::extendRegion(steepUp, down, uStart, minPts);
    index = uEnd + 1;
    mib = plot[index];

    std::vector<std::pair<std::size_t, std::size_t>> found;
    for (const auto& d : sdas) {
      std::size_t cStart = d.start;
      std::size_t cEnd = uEnd;
      if (plot[cEnd + 1] * xiComplement < d.mib) continue;
      const double dMax = plot[d.start];
      if (dMax * xiComplement >= plot[cEnd + 1]) {
        while (plot[cStart + 1] > plot[cEnd + 1] && cStart < d.end) ++cStart;
      } else if (plot[cEnd + 1] * xiComplement >= dMax) {
        while (plot[cEnd - 1] > dMax && cEnd > uStart) --cEnd;
      }
      if (predecessorCorrection && !detail::correctPredecessor(plot, predPlot, r.ordering, cStart, cEnd)) continue;
      if (cEnd - cStart + 1 < minClusterSize) continue;
      if (cStart > d.end) continue;
      if (cEnd < uStart) continue;
      found.emplace_back(cStart, cEnd);
    }
    std::reverse(found.begin(), found.end());
    clusters.insert(clusters.end(), found.begin(), found.end());
  }
  return clusters;
}

inline ClusterAssignment optics(const Matrix& x, const OpticsParams& params = {}) {
  if (params.minPts < 2) throw Error("optics: minPts must be >= 2");
  if (!(params.xi > 0.0 && params.xi < 1.0)) throw Error("optics: xi must lie in (0, 1)");
  const OpticsResult r = opticsOrdering(x, params.minPts);
  const std::size_t minSize = params.minClusterSize == 0 ? params.minPts : params.minClusterSize;
  const auto clusters = opticsXiClusters(r, params.minPts, params.xi, minSize, params.predecessorCorrection);

  // Keep a range only when none of its points is labelled yet.
  const std::size_t n = x.rows();
  std::vector<int> byPosition(n, kNoise);
  int next = 0;
  for (auto [s, e] : clusters) {
    bool free = true;
    for (std::size_t i = s; i <= e && free; ++i) free = byPosition[i] == kNoise;
    if (!free) continue;
    for (std::size_t i = s; i <= e; ++i) byPosition[i] = next;
    ++next;
  }
  std::vector<int> raw(n, kNoise);
  for (std::size_t i = 0; i < n; ++i) raw[r.ordering[i]] = byPosition[i];
  ClusterAssignment a = makeAssignment(raw);
  a.noiseMask.emplace(n, 0);
  for (std::size_t i = 0; i < n; ++i) (*a.noiseMask)[i] = raw[i] == kNoise ? 1 : 0;
  return a;
}

}  // namespace tacclust
