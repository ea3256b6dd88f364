#pragma once

// Ward agglomerative clustering. Distances live in a condensed upper-triangle
// array and are updated with the Lance-Williams recurrence; merges are found
// with the nearest-neighbour chain and then sorted into dendrogram order.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "tacclust/cluster/assignment.hpp"
#include "tacclust/matrix.hpp"

namespace tacclust {

struct WardMerge {
  std::size_t a = 0;  // smallest leaf index of the first cluster
  std::size_t b = 0;  // smallest leaf index of the second cluster
  double cost = 0.0;  // increase of the within-cluster sum of squares
  std::size_t size = 0;
};

struct Dendrogram {
  std::size_t leaves = 0;
  std::vector<WardMerge> merges;  // nondecreasing cost
};

namespace detail {

class CondensedDistances {
 public:
  explicit CondensedDistances(std::size_t n) : n_(n), d_(n < 2 ? 0 : n * (n - 1) / 2) {}
  double& operator()(std::size_t i, std::size_t j) { return d_[index(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const { return d_[index(i, j)]; }

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return i * n_ - i * (i + 1) / 2 + (j - i - 1);
  }
  std::size_t n_;
  std::vector<double> d_;
};

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

}  // namespace detail

/// Full Ward dendrogram of the rows of X. The stored distance between
/// clusters I and J is 2|I||J|/(|I|+|J|)·‖c_I − c_J‖², so merge costs are half
/// of it. Ties pick the lowest slot, except that the chain predecessor wins a
/// tie so the chain always terminates.
inline Dendrogram wardLinkage(const Matrix& x) {
  const std::size_t n = x.rows();
  Dendrogram dg;
  dg.leaves = n;
  if (n < 2) return dg;

  detail::CondensedDistances dist(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist(i, j) = squaredDistance(x.row(i), x.row(j));

  std::vector<std::size_t> size(n, 1);
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), 0);
  std::vector<std::size_t> chain;
  chain.reserve(n);
  std::vector<WardMerge> merges;
  merges.reserve(n - 1);

  while (active.size() > 1) {
    if (chain.empty()) chain.push_back(active.front());
    std::size_t a = 0;
    std::size_t b = 0;
    for (;;) {
      a = chain.back();
      const std::size_t prev = chain.size() >= 2 ? chain[chain.size() - 2] : n;
      double best = std::numeric_limits<double>::infinity();
      b = n;
      if (prev != n) {
        best = dist(a, prev);
        b = prev;
      }
      for (std::size_t s : active) {
        if (s == a) continue;
        const double v = dist(a, s);
        if (v < best || (v == best && s < b && b != prev)) {
          best = v;
          b = s;
        }
      }
      if (b == prev) break;
      chain.push_back(b);
    }
    chain.pop_back();
    chain.pop_back();

    const std::size_t keep = std::min(a, b);
    const std::size_t drop = std::max(a, b);
    const double dab = dist(a, b);
    const double sa = static_cast<double>(size[a]);
    const double sb = static_cast<double>(size[b]);
    for (std::size_t s : active) {
      if (s == a || s == b) continue;
      const double sk = static_cast<double>(size[s]);
      dist(keep, s) = ((sa + sk) * dist(a, s) + (sb + sk) * dist(b, s) - sk * dab) / (sa + sb + sk);
    }
    size[keep] += size[drop];
    active.erase(std::ranges::find(active, drop));
    merges.push_back({keep, drop, 0.5 * dab, size[keep]});
  }

  std::ranges::stable_sort(merges, [](const WardMerge& l, const WardMerge& r) { return l.cost < r.cost; });
  dg.merges = std::move(merges);
  return dg;
}

/// Applies the cheapest n − k merges. Cluster ids are numbered by the
/// smallest leaf they contain.
inline std::vector<int> cutDendrogram(const Dendrogram& dg, std::size_t k) {
  const std::size_t n = dg.leaves;
  if (k == 0 || k > n) throw Error("cutDendrogram: k must be in [1, n]");
  detail::UnionFind uf(n);
  for (std::size_t m = 0; m < n - k; ++m) uf.unite(dg.merges[m].a, dg.merges[m].b);
  std::vector<int> labels(n, -1);
  std::vector<int> rootLabel(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = uf.find(i);
    if (rootLabel[r] < 0) rootLabel[r] = next++;
    labels[i] = rootLabel[r];
  }
  return labels;
}

inline ClusterAssignment wardAgglomerative(const Matrix& x, std::size_t k) {
  requireAtLeast(x, k, "wardAgglomerative");
  const Dendrogram dg = wardLinkage(x);
  ClusterAssignment a = makeAssignment(cutDendrogram(dg, k));
  a.objectiveTrace.reserve(dg.merges.size());
  for (const auto& m : dg.merges) a.objectiveTrace.push_back(m.cost);
  return a;
}

}  // namespace tacclust
