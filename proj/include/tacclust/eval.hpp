#pragma once

// Reduction of arbitrary clusterings to five clusters, cluster-to-organ
// matching, and accuracy / precision / recall.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "tacclust/cluster/assignment.hpp"
#include "tacclust/tacgen.hpp"

namespace tacclust {

inline constexpr std::size_t kTargetK = kOrganCount;

/// Where noise points go when the clustering has at most five clusters.
enum class NoisePolicy {
  SmallestCluster,  // the canonical id with the fewest non-noise points (lowest id on ties)
  OwnCluster,       // the first unused canonical id; the smallest cluster when all five are used
};

struct CanonicalClustering {
  std::vector<int> labels;        // in [0, targetK)
  std::map<int, int> provenance;  // original id (kNoise for noise) -> canonical id
  std::size_t targetK = kTargetK;

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(targetK, 0);
    for (int l : labels) ++s[static_cast<std::size_t>(l)];
    return s;
  }
};

/// More than targetK clusters: the targetK − 1 largest (ties: lower id) take
/// canonical ids 0.. in that order and everything else, noise included, forms
/// the last id. Otherwise ids are kept and noise follows `policy`.
inline CanonicalClustering canonicalize(const ClusterAssignment& a, std::size_t targetK = kTargetK,
                                        NoisePolicy policy = NoisePolicy::SmallestCluster) {
  if (targetK < 1) throw Error("canonicalize: targetK must be >= 1");
  a.validate();
  CanonicalClustering c;
  c.targetK = targetK;
  c.labels.resize(a.size());
  const auto kFound = static_cast<std::size_t>(a.kFound);
  std::vector<std::size_t> counts(kFound, 0);
  for (int l : a.labels)
    if (l != kNoise) ++counts[static_cast<std::size_t>(l)];

  std::vector<int> mapping(kFound);
  int noiseTarget = 0;
  if (kFound > targetK) {
    std::vector<std::size_t> order(kFound);
    std::iota(order.begin(), order.end(), 0);
    std::ranges::stable_sort(order, [&](std::size_t l, std::size_t r) { return counts[l] > counts[r]; });
    const int overflow = static_cast<int>(targetK) - 1;
    std::ranges::fill(mapping, overflow);
    for (std::size_t r = 0; r + 1 < targetK; ++r) mapping[order[r]] = static_cast<int>(r);
    noiseTarget = overflow;
  } else {
    std::iota(mapping.begin(), mapping.end(), 0);
    std::vector<std::size_t> canonicalCounts(targetK, 0);
    std::copy(counts.begin(), counts.end(), canonicalCounts.begin());
    if (policy == NoisePolicy::OwnCluster && kFound < targetK) {
      noiseTarget = static_cast<int>(kFound);
    } else {
      noiseTarget = static_cast<int>(std::ranges::min_element(canonicalCounts) - canonicalCounts.begin());
    }
  }

  for (std::size_t id = 0; id < kFound; ++id) c.provenance[static_cast<int>(id)] = mapping[id];
  if (a.noiseCount() > 0) c.provenance[kNoise] = noiseTarget;
  for (std::size_t i = 0; i < a.size(); ++i)
    c.labels[i] = a.labels[i] == kNoise ? noiseTarget : mapping[static_cast<std::size_t>(a.labels[i])];
  return c;
}

struct EvalReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  /// confusion[o][p]: curves of true organ o placed in the cluster matched to organ p.
  std::array<std::array<std::size_t, kOrganCount>, kOrganCount> confusion{};
  std::array<double, kOrganCount> precision{};
  std::array<double, kOrganCount> recall{};
  /// matching[c]: organ index assigned to canonical cluster c.
  std::array<int, kOrganCount> matching{};

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

namespace detail {

inline void fillMetrics(EvalReport& r) {
  std::size_t correct = 0;
  for (std::size_t o = 0; o < kOrganCount; ++o) {
    std::size_t row = 0;
    std::size_t col = 0;
    for (std::size_t p = 0; p < kOrganCount; ++p) {
      row += r.confusion[o][p];
      col += r.confusion[p][o];
    }
    const auto hit = static_cast<double>(r.confusion[o][o]);
    correct += r.confusion[o][o];
    r.precision[o] = col == 0 ? 0.0 : hit / static_cast<double>(col);
    r.recall[o] = row == 0 ? 0.0 : hit / static_cast<double>(row);
  }
  r.accuracy = r.n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(r.n);
}

}  // namespace detail

/// Tries all 120 cluster-to-organ assignments, keeps the one with the most
/// correctly placed curves; among equals the lexicographically smallest.
inline EvalReport bestMatching(const CanonicalClustering& c, const std::vector<int>& truth) {
  if (c.labels.size() != truth.size()) throw Error("bestMatching: prediction and truth lengths differ");
  if (c.targetK != kOrganCount) throw Error("bestMatching: expected five canonical clusters");
  std::array<std::array<std::size_t, kOrganCount>, kOrganCount> table{};  // [cluster][organ]
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= static_cast<int>(kOrganCount)) throw Error("bestMatching: truth label out of range");
    if (c.labels[i] < 0 || c.labels[i] >= static_cast<int>(kOrganCount)) throw Error("bestMatching: cluster label out of range");
    ++table[static_cast<std::size_t>(c.labels[i])][static_cast<std::size_t>(truth[i])];
  }
  std::array<int, kOrganCount> perm{};
  std::iota(perm.begin(), perm.end(), 0);
  std::array<int, kOrganCount> best = perm;
  std::size_t bestHits = 0;
  bool first = true;
  do {
    std::size_t hits = 0;
    for (std::size_t cl = 0; cl < kOrganCount; ++cl) hits += table[cl][static_cast<std::size_t>(perm[cl])];
    if (first || hits > bestHits) {
      bestHits = hits;
      best = perm;
      first = false;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  EvalReport r;
  r.n = truth.size();
  r.matching = best;
  for (std::size_t cl = 0; cl < kOrganCount; ++cl)
    for (std::size_t o = 0; o < kOrganCount; ++o) r.confusion[o][static_cast<std::size_t>(best[cl])] += table[cl][o];
  detail::fillMetrics(r);
  return r;
}

inline EvalReport bestMatching(const CanonicalClustering& c, const std::vector<Organ>& truth) {
  std::vector<int> t(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) t[i] = static_cast<int>(truth[i]);
  return bestMatching(c, t);
}

/// Report for a confusion matrix given directly (rows true organ, columns
/// predicted organ), with the identity matching.
inline EvalReport reportFromConfusion(const std::array<std::array<std::size_t, kOrganCount>, kOrganCount>& confusion) {
  EvalReport r;
  r.confusion = confusion;
  std::iota(r.matching.begin(), r.matching.end(), 0);
  for (const auto& row : confusion) r.n = std::accumulate(row.begin(), row.end(), r.n);
  detail::fillMetrics(r);
  return r;
}

namespace detail {

inline std::size_t organIndex(Organ o) {
  const auto i = static_cast<std::size_t>(o);
  if (i >= kOrganCount) throw Error("unknown organ");
  return i;
}

}  // namespace detail

inline double accuracy(const EvalReport& r) { return r.accuracy; }
inline double precision(const EvalReport& r, Organ o) { return r.precision[detail::organIndex(o)]; }
inline double recall(const EvalReport& r, Organ o) { return r.recall[detail::organIndex(o)]; }

/// Median; the mean of the two middle values for an even count.
inline double median(std::vector<double> v) {
  if (v.empty()) throw Error("median: empty sample");
  std::ranges::sort(v);
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

/// Standard deviation with divisor n. Values are shifted by the first one
/// so a constant sample gives exactly 0.
inline double populationSd(const std::vector<double>& v) {
  if (v.empty()) throw Error("populationSd: empty sample");
  const double shift = v.front();
  double sum = 0.0;
  for (double x : v) sum += x - shift;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - shift - mean) * (x - shift - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

struct MetricSummary {
  double median = 0.0;
  double sd = 0.0;
};

struct PatientSummary {
  std::size_t count = 0;
  MetricSummary accuracy;
  std::array<MetricSummary, kOrganCount> precision{};
  std::array<MetricSummary, kOrganCount> recall{};
};

inline PatientSummary summarizeOverPatients(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw Error("summarizeOverPatients: no reports");
  auto summarize = [&](auto pick) {
    std::vector<double> v;
    v.reserve(reports.size());
    for (const auto& r : reports) v.push_back(pick(r));
    return MetricSummary{median(v), populationSd(v)};
  };
  PatientSummary s;
  s.count = reports.size();
  s.accuracy = summarize([](const EvalReport& r) { return r.accuracy; });
  for (std::size_t o = 0; o < kOrganCount; ++o) {
    s.precision[o] = summarize([o](const EvalReport& r) { return r.precision[o]; });
    s.recall[o] = summarize([o](const EvalReport& r) { return r.recall[o]; });
  }
  return s;
}

}  // namespace tacclust
