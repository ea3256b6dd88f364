#pragma once

// Synthetic five-organ time-activity curves on the 24-frame dynamic
// acquisition grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "tacclust/error.hpp"
#include "tacclust/matrix.hpp"
#include "tacclust/rng.hpp"

namespace tacclust {

enum class Organ : int { Brain = 0, Heart = 1, Kidney = 2, Lung = 3, Bladder = 4 };

inline constexpr std::size_t kOrganCount = 5;
inline constexpr std::array<Organ, kOrganCount> kAllOrgans = {Organ::Brain, Organ::Heart, Organ::Kidney,
                                                               Organ::Lung, Organ::Bladder};

inline std::string_view organName(Organ o) {
  switch (o) {
    case Organ::Brain: return "Brain";
    case Organ::Heart: return "Heart";
    case Organ::Kidney: return "Kidney";
    case Organ::Lung: return "Lung";
    case Organ::Bladder: return "Bladder";
  }
  throw Error("unknown organ " + std::to_string(static_cast<int>(o)));
}

inline Organ parseOrgan(std::string_view name) {
  for (Organ o : kAllOrgans)
    if (organName(o) == name) return o;
  throw Error("unknown organ label '" + std::string(name) + "'");
}

inline Organ organFromIndex(int i) {
  if (i < 0 || i >= static_cast<int>(kOrganCount)) throw Error("unknown organ index " + std::to_string(i));
  return static_cast<Organ>(i);
}

class FrameSchedule {
 public:
  FrameSchedule() = default;
  explicit FrameSchedule(std::vector<double> durations) : durations_(std::move(durations)) {
    if (durations_.empty()) throw Error("FrameSchedule: no frames");
    double start = 0.0;
    midTimes_.reserve(durations_.size());
    for (double d : durations_) {
      if (!(d > 0.0) || !std::isfinite(d)) throw Error("FrameSchedule: frame durations must be positive");
      midTimes_.push_back(start + d / 2.0);
      start += d;
    }
  }

  std::size_t count() const noexcept { return durations_.size(); }
  const std::vector<double>& durations() const noexcept { return durations_; }
  const std::vector<double>& midTimes() const noexcept { return midTimes_; }

  /// Time at which frame `i` (0-based) ends.
  double endTime(std::size_t i) const {
    return std::accumulate(durations_.begin(), durations_.begin() + static_cast<std::ptrdiff_t>(i) + 1, 0.0);
  }

  friend bool operator==(const FrameSchedule&, const FrameSchedule&) = default;

 private:
  std::vector<double> durations_;
  std::vector<double> midTimes_;
};

/// 14 x 5 s, 3 x 10 s, 3 x 20 s, 4 x 30 s: 24 frames over 280 s.
inline FrameSchedule defaultFrameSchedule() {
  std::vector<double> d;
  d.insert(d.end(), 14, 5.0);
  d.insert(d.end(), 3, 10.0);
  d.insert(d.end(), 3, 20.0);
  d.insert(d.end(), 4, 30.0);
  return FrameSchedule(std::move(d));
}

/// Gamma-variate bolus plus a saturating accumulation term:
///   A·u^α·e^(−u) + plateau·A·(1 − e^(−u)),  u = (t − delay)/washout, u ≥ 0.
struct OrganKineticTemplate {
  Organ organ = Organ::Brain;
  double amplitude = 1.0;
  double delay = 0.0;
  double riseShape = 1.0;
  double washout = 1.0;
  double plateau = 0.0;

  double operator()(double t) const {
    if (t <= delay) return 0.0;
    const double u = (t - delay) / washout;
    const double decay = std::exp(-u);
    return amplitude * std::pow(u, riseShape) * decay + plateau * amplitude * (1.0 - decay);
  }

  std::vector<double> evaluate(const FrameSchedule& schedule) const {
    std::vector<double> out;
    out.reserve(schedule.count());
    for (double t : schedule.midTimes()) out.push_back((*this)(t));
    return out;
  }
};

// Heart spikes first (blood pool), lung follows, kidney peaks later and stays
// high, brain is slow, bladder only accumulates within the 280 s window.
inline OrganKineticTemplate organTemplate(Organ organ) {
  switch (organ) {
    case Organ::Brain: return {Organ::Brain, 28.0, 12.0, 2.0, 18.0, 0.50};
    case Organ::Heart: return {Organ::Heart, 150.0, 3.0, 1.5, 5.0, 0.15};
    case Organ::Kidney: return {Organ::Kidney, 75.0, 8.0, 2.0, 12.0, 0.55};
    case Organ::Lung: return {Organ::Lung, 60.0, 4.0, 1.5, 7.0, 0.20};
    case Organ::Bladder: return {Organ::Bladder, 40.0, 20.0, 2.0, 150.0, 0.30};
  }
  throw Error("organTemplate: unknown organ " + std::to_string(static_cast<int>(organ)));
}

inline double maxTemplateAmplitude() {
  double m = 0.0;
  for (Organ o : kAllOrgans) m = std::max(m, organTemplate(o).amplitude);
  return m;
}

struct SyntheticConfig {
  std::size_t curvesPerOrgan = 1000;
  double noiseRelative = 0.10;
  double noiseFloor = 0.02 * maxTemplateAmplitude();
  double perCurveJitter = 0.05;
  std::uint64_t seed = 0;

  void validate() const {
    if (curvesPerOrgan < 1) throw Error("SyntheticConfig: curvesPerOrgan must be >= 1");
    if (!(noiseRelative >= 0.0) || !(noiseFloor >= 0.0) || !(perCurveJitter >= 0.0))
      throw Error("SyntheticConfig: noise and jitter sigmas must be >= 0");
  }
};

struct TacDataset {
  Matrix curves;              // n x T, row-major
  std::vector<Organ> labels;  // n
  FrameSchedule schedule;
  std::string patientId;

  std::size_t size() const noexcept { return labels.size(); }

  std::vector<int> labelIndices() const {
    std::vector<int> out(labels.size());
    std::ranges::transform(labels, out.begin(), [](Organ o) { return static_cast<int>(o); });
    return out;
  }

  void validate() const {
    if (curves.rows() != labels.size()) throw Error("TacDataset: row count differs from label count");
    if (curves.cols() != schedule.count()) throw Error("TacDataset: column count differs from frame count");
    for (double v : curves.data())
      if (!std::isfinite(v) || v < 0.0) throw Error("TacDataset: activity values must be finite and >= 0");
  }

  friend bool operator==(const TacDataset&, const TacDataset&) = default;
};

/// Curves come out in organ blocks (Brain, Heart, Kidney, Lung, Bladder). The
/// stream is seeded from (config.seed, patientId) only, so the result is a
/// pure function of the arguments.
inline TacDataset generateDataset(const SyntheticConfig& config, const FrameSchedule& schedule,
                                  const std::string& patientId) {
  config.validate();
  const std::size_t frames = schedule.count();
  TacDataset ds;
  ds.schedule = schedule;
  ds.patientId = patientId;
  ds.curves = Matrix(config.curvesPerOrgan * kOrganCount, frames);
  ds.labels.reserve(config.curvesPerOrgan * kOrganCount);

  Rng rng(mixSeed(config.seed, hashString(patientId)));
  std::size_t row = 0;
  for (Organ organ : kAllOrgans) {
    const OrganKineticTemplate base = organTemplate(organ);
    for (std::size_t c = 0; c < config.curvesPerOrgan; ++c, ++row) {
      OrganKineticTemplate tpl = base;
      tpl.amplitude *= 1.0 + config.perCurveJitter * rng.gaussian();
      tpl.delay *= 1.0 + config.perCurveJitter * rng.gaussian();
      tpl.washout *= 1.0 + config.perCurveJitter * rng.gaussian();
      // Extreme jitter draws must not flip the template into an invalid shape.
      tpl.amplitude = std::max(tpl.amplitude, 0.0);
      tpl.delay = std::max(tpl.delay, 0.0);
      tpl.washout = std::max(tpl.washout, 1e-6 * base.washout);

      auto out = ds.curves.row(row);
      for (std::size_t f = 0; f < frames; ++f) {
        const double v = tpl(schedule.midTimes()[f]);
        const double relative = config.noiseRelative * rng.gaussian();
        const double floor = config.noiseFloor * rng.gaussian();
        out[f] = std::max(0.0, v * (1.0 + relative) + floor);
      }
      ds.labels.push_back(organ);
    }
  }
  return ds;
}

}  // namespace tacclust
