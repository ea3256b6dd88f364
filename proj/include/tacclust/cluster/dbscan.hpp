#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "tacclust/cluster/assignment.hpp"

namespace tacclust {

struct DbscanParams {
  double eps = 0.5;
  std::size_t minPts = 5;  // neighbourhood size, the point itself included
};

/// Brute-force DBSCAN. A point is core when at least minPts points (itself
/// included) lie within distance eps. Clusters grow from core points in index
/// order; a border point joins the first cluster that reaches it.
inline ClusterAssignment dbscan(const Matrix& x, const DbscanParams& params = {}) {
  if (!(params.eps > 0.0)) throw Error("dbscan: eps must be > 0");
  if (params.minPts < 1) throw Error("dbscan: minPts must be >= 1");
  const std::size_t n = x.rows();
  const double eps2 = params.eps * params.eps;

  std::vector<std::size_t> neighbourCount(n, 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (squaredDistance(x.row(i), x.row(j)) <= eps2) {
        ++neighbourCount[i];
        ++neighbourCount[j];
      }

  std::vector<int> raw(n, kNoise);
  int cluster = 0;
  std::deque<std::size_t> frontier;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (raw[seed] != kNoise || neighbourCount[seed] < params.minPts) continue;
    raw[seed] = cluster;
    frontier.push_back(seed);
    while (!frontier.empty()) {
      const std::size_t p = frontier.front();
      frontier.pop_front();
      if (neighbourCount[p] < params.minPts) continue;  // border: does not expand
      for (std::size_t q = 0; q < n; ++q) {
        if (raw[q] != kNoise || squaredDistance(x.row(p), x.row(q)) > eps2) continue;
        raw[q] = cluster;
        frontier.push_back(q);
      }
    }
    ++cluster;
  }
  ClusterAssignment a = makeAssignment(raw);
  a.noiseMask.emplace(n, 0);
  for (std::size_t i = 0; i < n; ++i) (*a.noiseMask)[i] = raw[i] == kNoise ? 1 : 0;
  return a;
}

}  // namespace tacclust
