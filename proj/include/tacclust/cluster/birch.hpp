#pragma once

// Birch: a clustering-feature (CF) tree condenses the data into leaf
// subclusters whose radius stays under a threshold; the subcluster centroids
// are then grouped by Ward linkage.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "tacclust/cluster/assignment.hpp"
#include "tacclust/cluster/ward.hpp"

namespace tacclust {

struct BirchParams {
  double threshold = 0.5;
  std::size_t branching = 50;
};

/// (count, linear sum, squared sum) summary of a set of points.
struct ClusteringFeature {
  std::size_t count = 0;
  std::vector<double> linearSum;
  double squaredSum = 0.0;

  void add(const ClusteringFeature& other) {
    if (linearSum.empty()) linearSum.assign(other.linearSum.size(), 0.0);
    count += other.count;
    for (std::size_t j = 0; j < linearSum.size(); ++j) linearSum[j] += other.linearSum[j];
    squaredSum += other.squaredSum;
  }

  std::vector<double> centroid() const {
    std::vector<double> c(linearSum);
    for (double& v : c) v /= static_cast<double>(count);
    return c;
  }
};

class CfTree {
 public:
  CfTree(std::size_t dims, const BirchParams& params) : dims_(dims), params_(params) {
    if (!(params.threshold > 0.0)) throw Error("birch: threshold must be > 0");
    if (params.branching < 2) throw Error("birch: branching factor must be >= 2");
    root_ = std::make_unique<Node>();
    root_->leaf = true;
  }

  /// Inserts a point and returns the id of the leaf subcluster that holds it.
  int insert(std::span<const double> x) {
    Entry e;
    e.cf.count = 1;
    e.cf.linearSum.assign(x.begin(), x.end());
    e.cf.squaredSum = dot(x, x);
    e.centroid.assign(x.begin(), x.end());
    e.id = nextId_++;
    int landed = -1;
    if (insertInto(*root_, std::move(e), landed)) {
      auto [a, b] = splitNode(std::move(root_));
      root_ = std::make_unique<Node>();
      root_->leaf = false;
      root_->entries.push_back(std::move(a));
      root_->entries.push_back(std::move(b));
    }
    return landed;
  }

  struct LeafSubcluster {
    int id;
    std::vector<double> centroid;
    ClusteringFeature cf;
  };

  std::vector<LeafSubcluster> leafSubclusters() const {
    std::vector<LeafSubcluster> out;
    collect(*root_, out);
    return out;
  }

  /// True when every non-leaf entry equals the componentwise sum of its
  /// child's entries, within `tol` relative.
  bool checkAdditivity(double tol = 1e-9) const { return checkNode(*root_, tol); }

  std::size_t depth() const {
    std::size_t d = 1;
    for (const Node* n = root_.get(); !n->leaf; n = n->entries.front().child.get()) ++d;
    return d;
  }

 private:
  struct Node;
  struct Entry {
    ClusteringFeature cf;
    std::vector<double> centroid;
    std::unique_ptr<Node> child;
    int id = -1;  // leaf subclusters only

    void refresh() { centroid = cf.centroid(); }
  };
  struct Node {
    bool leaf = true;
    std::vector<Entry> entries;
  };

  static std::size_t closestEntry(const Node& node, std::span<const double> x) {
    std::size_t best = 0;
    double bestD = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < node.entries.size(); ++i) {
      const double d = squaredDistance(node.entries[i].centroid, x);
      if (d < bestD) {
        bestD = d;
        best = i;
      }
    }
    return best;
  }

  Entry summarize(std::unique_ptr<Node> node) const {
    Entry e;
    e.cf.linearSum.assign(dims_, 0.0);
    for (const auto& child : node->entries) e.cf.add(child.cf);
    e.refresh();
    e.child = std::move(node);
    return e;
  }

  // Splits a node around its two farthest entries.
  std::pair<Entry, Entry> splitNode(std::unique_ptr<Node> node) const {
    auto& es = node->entries;
    std::size_t fa = 0;
    std::size_t fb = 1;
    double far = -1.0;
    for (std::size_t i = 0; i < es.size(); ++i)
      for (std::size_t j = i + 1; j < es.size(); ++j) {
        const double d = squaredDistance(es[i].centroid, es[j].centroid);
        if (d > far) {
          far = d;
          fa = i;
          fb = j;
        }
      }
    auto n1 = std::make_unique<Node>();
    auto n2 = std::make_unique<Node>();
    n1->leaf = n2->leaf = node->leaf;
    std::vector<double> ca = es[fa].centroid;
    std::vector<double> cb = es[fb].centroid;
    for (std::size_t i = 0; i < es.size(); ++i) {
      const bool toFirst = i == fa || (i != fb && squaredDistance(es[i].centroid, ca) < squaredDistance(es[i].centroid, cb));
      (toFirst ? n1 : n2)->entries.push_back(std::move(es[i]));
    }
    return {summarize(std::move(n1)), summarize(std::move(n2))};
  }

  // Returns true when `node` overflowed and must be split by the caller.
  bool insertInto(Node& node, Entry e, int& landed) {
    if (node.entries.empty()) {
      landed = e.id;
      node.entries.push_back(std::move(e));
      return false;
    }
    const std::size_t ci = closestEntry(node, e.centroid);
    Entry& closest = node.entries[ci];
    if (!node.leaf) {
      const ClusteringFeature added = e.cf;
      if (!insertInto(*closest.child, std::move(e), landed)) {
        closest.cf.add(added);
        closest.refresh();
        return false;
      }
      auto [a, b] = splitNode(std::move(closest.child));
      node.entries[ci] = std::move(a);
      node.entries.push_back(std::move(b));
      return node.entries.size() > params_.branching;
    }

    ClusteringFeature merged = closest.cf;
    merged.add(e.cf);
    const auto c = merged.centroid();
    const double sqRadius = merged.squaredSum / static_cast<double>(merged.count) - dot(c, c);
    if (sqRadius <= params_.threshold * params_.threshold) {
      closest.cf = std::move(merged);
      closest.centroid = c;
      landed = closest.id;
      --nextId_;  // the provisional id was never used
      return false;
    }
    landed = e.id;
    node.entries.push_back(std::move(e));
    return node.entries.size() > params_.branching;
  }

  static void collect(const Node& node, std::vector<LeafSubcluster>& out) {
    for (const auto& e : node.entries) {
      if (node.leaf)
        out.push_back({e.id, e.centroid, e.cf});
      else
        collect(*e.child, out);
    }
  }

  static bool checkNode(const Node& node, double tol) {
    if (node.leaf) return true;
    for (const auto& e : node.entries) {
      ClusteringFeature sum;
      sum.linearSum.assign(e.cf.linearSum.size(), 0.0);
      for (const auto& c : e.child->entries) sum.add(c.cf);
      if (sum.count != e.cf.count) return false;
      auto close = [tol](double a, double b) { return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)}); };
      if (!close(sum.squaredSum, e.cf.squaredSum)) return false;
      for (std::size_t j = 0; j < sum.linearSum.size(); ++j)
        if (!close(sum.linearSum[j], e.cf.linearSum[j])) return false;
      if (!checkNode(*e.child, tol)) return false;
    }
    return true;
  }

  std::size_t dims_;
  BirchParams params_;
  std::unique_ptr<Node> root_;
  int nextId_ = 0;
};

/// Labels each point by the final cluster of the leaf subcluster it was
/// absorbed into. With fewer subclusters than k every subcluster is its own
/// cluster.
inline ClusterAssignment birch(const Matrix& x, std::size_t k, const BirchParams& params = {}) {
  requireAtLeast(x, k, "birch");
  CfTree tree(x.cols(), params);
  std::vector<int> subclusterOf(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) subclusterOf[i] = tree.insert(x.row(i));

  const auto leaves = tree.leafSubclusters();
  int maxId = 0;
  for (const auto& l : leaves) maxId = std::max(maxId, l.id);
  std::vector<int> slot(static_cast<std::size_t>(maxId) + 1, -1);
  Matrix centroids(leaves.size(), x.cols());
  for (std::size_t s = 0; s < leaves.size(); ++s) {
    slot[static_cast<std::size_t>(leaves[s].id)] = static_cast<int>(s);
    std::ranges::copy(leaves[s].centroid, centroids.row(s).begin());
  }
  std::vector<int> subLabel;
  if (leaves.size() > k) {
    subLabel = cutDendrogram(wardLinkage(centroids), k);
  } else {
    subLabel.resize(leaves.size());
    std::iota(subLabel.begin(), subLabel.end(), 0);
  }
  std::vector<int> raw(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    raw[i] = subLabel[static_cast<std::size_t>(slot[static_cast<std::size_t>(subclusterOf[i])])];
  return makeAssignment(raw);
}

}  // namespace tacclust
