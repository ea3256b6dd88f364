#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "tacclust/error.hpp"
#include "tacclust/matrix.hpp"

namespace tacclust {

/// Label carried by points that a density method leaves unclustered.
inline constexpr int kNoise = -1;

struct ClusterAssignment {
  std::vector<int> labels;  // in [0, kFound), or kNoise
  int kFound = 0;
  std::optional<Matrix> memberships;                 // n x k fuzzy degrees / responsibilities
  std::optional<std::vector<std::uint8_t>> noiseMask;  // present for density methods
  double fitSeconds = 0.0;
  std::optional<double> reduceSeconds;
  /// Objective value per iteration (inertia, log-likelihood, merge cost...).
  std::vector<double> objectiveTrace;
  bool converged = true;

  std::size_t size() const noexcept { return labels.size(); }

  std::size_t noiseCount() const {
    return static_cast<std::size_t>(std::ranges::count(labels, kNoise));
  }

  void validate() const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool noise = noiseMask && (*noiseMask)[i] != 0;
      if (noise != (labels[i] == kNoise)) throw Error("ClusterAssignment: noise mask disagrees with labels");
      if (labels[i] != kNoise && (labels[i] < 0 || labels[i] >= kFound))
        throw Error("ClusterAssignment: label out of range");
    }
    if (memberships) {
      if (memberships->rows() != labels.size()) throw Error("ClusterAssignment: membership row count");
      for (std::size_t i = 0; i < memberships->rows(); ++i) {
        double s = 0.0;
        for (double u : memberships->row(i)) {
          if (u < 0.0 || u > 1.0) throw Error("ClusterAssignment: membership outside [0, 1]");
          s += u;
        }
        if (std::abs(s - 1.0) > 1e-9) throw Error("ClusterAssignment: membership row does not sum to 1");
      }
    }
    if (fitSeconds < 0.0 || (reduceSeconds && *reduceSeconds < 0.0))
      throw Error("ClusterAssignment: negative timing");
  }
};

/// Builds an assignment from raw cluster ids, renumbering the distinct
/// non-noise ids to 0..K-1 in ascending order of the raw id. Negative raw ids
/// are noise.
inline ClusterAssignment makeAssignment(const std::vector<int>& raw) {
  std::map<int, int> remap;
  bool anyNoise = false;
  for (int r : raw) {
    if (r < 0)
      anyNoise = true;
    else
      remap.emplace(r, 0);
  }
  int next = 0;
  for (auto& [id, mapped] : remap) mapped = next++;

  ClusterAssignment a;
  a.kFound = next;
  a.labels.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) a.labels[i] = raw[i] < 0 ? kNoise : remap[raw[i]];
  if (anyNoise) {
    a.noiseMask.emplace(raw.size(), 0);
    for (std::size_t i = 0; i < raw.size(); ++i) (*a.noiseMask)[i] = raw[i] < 0 ? 1 : 0;
  }
  return a;
}

/// Index of the nearest row of `centers` to `x`; ties go to the lowest index.
inline std::size_t nearestCenter(std::span<const double> x, const Matrix& centers, double* sqDist = nullptr) {
  std::size_t best = 0;
  double bestD = squaredDistance(x, centers.row(0));
  for (std::size_t c = 1; c < centers.rows(); ++c) {
    const double d = squaredDistance(x, centers.row(c));
    if (d < bestD) {
      bestD = d;
      best = c;
    }
  }
  if (sqDist != nullptr) *sqDist = bestD;
  return best;
}

inline void requireAtLeast(const Matrix& x, std::size_t k, const char* who) {
  if (k == 0) throw Error(std::string(who) + ": k must be >= 1");
  if (x.rows() < k)
    throw Error(std::string(who) + ": n = " + std::to_string(x.rows()) + " is smaller than k = " + std::to_string(k));
}

}  // namespace tacclust
