#pragma once

// The fifteen named pipelines, their hyperparameter record, and dispatch.

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tacclust/cluster/affinity_propagation.hpp"
#include "tacclust/cluster/birch.hpp"
#include "tacclust/cluster/dbscan.hpp"
#include "tacclust/cluster/fcm.hpp"
#include "tacclust/cluster/gmm.hpp"
#include "tacclust/cluster/kmeans.hpp"
#include "tacclust/cluster/mean_shift.hpp"
#include "tacclust/cluster/optics.hpp"
#include "tacclust/cluster/spectral.hpp"
#include "tacclust/cluster/ward.hpp"
#include "tacclust/reduce.hpp"
#include "tacclust/tacgen.hpp"

namespace tacclust {

enum class MethodId {
  KMeans,
  MBK,
  PcaKMeans,
  PcaMBK,
  IcaKMeans,
  IcaMBK,
  GMM,
  AC,
  Spectral,
  Birch,
  AP,
  MeanShift,
  DBSCAN,
  OPTICS,
  FCM,
};

inline constexpr std::array<MethodId, 15> kAllMethods = {
    MethodId::KMeans, MethodId::MBK,   MethodId::PcaKMeans, MethodId::PcaMBK, MethodId::IcaKMeans,
    MethodId::IcaMBK, MethodId::GMM,   MethodId::AC,        MethodId::Spectral, MethodId::Birch,
    MethodId::AP,     MethodId::MeanShift, MethodId::DBSCAN, MethodId::OPTICS, MethodId::FCM,
};

inline std::string_view methodName(MethodId id) {
  switch (id) {
    case MethodId::KMeans: return "KMeans";
    case MethodId::MBK: return "MBK";
    case MethodId::PcaKMeans: return "PcaKMeans";
    case MethodId::PcaMBK: return "PcaMBK";
    case MethodId::IcaKMeans: return "IcaKMeans";
    case MethodId::IcaMBK: return "IcaMBK";
    case MethodId::GMM: return "GMM";
    case MethodId::AC: return "AC";
    case MethodId::Spectral: return "Spectral";
    case MethodId::Birch: return "Birch";
    case MethodId::AP: return "AP";
    case MethodId::MeanShift: return "MeanShift";
    case MethodId::DBSCAN: return "DBSCAN";
    case MethodId::OPTICS: return "OPTICS";
    case MethodId::FCM: return "FCM";
  }
  throw Error("methodName: invalid method id");
}

/// Human-facing label used in report tables.
inline std::string_view methodDisplayName(MethodId id) {
  switch (id) {
    case MethodId::KMeans: return "K-means";
    case MethodId::MBK: return "MBK";
    case MethodId::PcaKMeans: return "PCA+K-means";
    case MethodId::PcaMBK: return "PCA+MBK";
    case MethodId::IcaKMeans: return "ICA+K-means";
    case MethodId::IcaMBK: return "ICA+MBK";
    case MethodId::GMM: return "GMM";
    case MethodId::AC: return "AC";
    case MethodId::Spectral: return "Spectral";
    case MethodId::Birch: return "Birch";
    case MethodId::AP: return "AP";
    case MethodId::MeanShift: return "Mean shift";
    case MethodId::DBSCAN: return "DBSCAN";
    case MethodId::OPTICS: return "OPTICS";
    case MethodId::FCM: return "FCM";
  }
  throw Error("methodDisplayName: invalid method id");
}

inline MethodId parseMethod(std::string_view name) {
  for (MethodId id : kAllMethods)
    if (methodName(id) == name) return id;
  throw Error("unknown method id '" + std::string(name) + "'");
}

/// False for the four methods that choose their own cluster count.
inline bool methodTakesK(MethodId id) {
  return id != MethodId::AP && id != MethodId::MeanShift && id != MethodId::DBSCAN && id != MethodId::OPTICS;
}

inline bool methodReduces(MethodId id) {
  return id == MethodId::PcaKMeans || id == MethodId::PcaMBK || id == MethodId::IcaKMeans || id == MethodId::IcaMBK;
}

inline constexpr std::size_t kDefaultK = 5;

struct Hyperparameters {
  KMeansParams kmeans;
  MiniBatchParams miniBatch;
  GmmParams gmm;
  FcmParams fcm;
  BirchParams birch;
  SpectralParams spectral;
  DbscanParams dbscan;
  OpticsParams optics;
  MeanShiftParams meanShift;
  AffinityPropagationParams ap;
  std::size_t components = kDefaultComponents;
  double icaTolerance = 1e-4;
  int icaMaxIterations = 200;
};

namespace detail {

using Setter = std::function<void(Hyperparameters&, double)>;

inline double requireIntegral(double v, std::string_view param) {
  if (!(v >= 0.0) || std::floor(v) != v) throw Error("parameter '" + std::string(param) + "' expects a non-negative integer");
  return v;
}

inline std::map<std::string, Setter, std::less<>> settersFor(MethodId id) {
  std::map<std::string, Setter, std::less<>> s;
  auto integer = [](auto member) {
    return [member](Hyperparameters& h, double v) { member(h) = static_cast<std::remove_reference_t<decltype(member(h))>>(v); };
  };
  auto real = [](auto member) { return [member](Hyperparameters& h, double v) { member(h) = v; }; };

  const bool km = id == MethodId::KMeans || id == MethodId::PcaKMeans || id == MethodId::IcaKMeans;
  const bool mbk = id == MethodId::MBK || id == MethodId::PcaMBK || id == MethodId::IcaMBK;
  if (km) {
    s["restarts"] = integer([](Hyperparameters& h) -> int& { return h.kmeans.restarts; });
    s["maxIterations"] = integer([](Hyperparameters& h) -> int& { return h.kmeans.maxIterations; });
    s["tolerance"] = real([](Hyperparameters& h) -> double& { return h.kmeans.tolerance; });
  }
  if (mbk) {
    s["batchSize"] = integer([](Hyperparameters& h) -> std::size_t& { return h.miniBatch.batchSize; });
    s["maxEpochs"] = integer([](Hyperparameters& h) -> int& { return h.miniBatch.maxEpochs; });
    s["restarts"] = integer([](Hyperparameters& h) -> int& { return h.miniBatch.restarts; });
    s["maxNoImprovement"] = integer([](Hyperparameters& h) -> int& { return h.miniBatch.maxNoImprovement; });
  }
  if (methodReduces(id)) {
    s["components"] = integer([](Hyperparameters& h) -> std::size_t& { return h.components; });
    if (id == MethodId::IcaKMeans || id == MethodId::IcaMBK) {
      s["icaTolerance"] = real([](Hyperparameters& h) -> double& { return h.icaTolerance; });
      s["icaMaxIterations"] = integer([](Hyperparameters& h) -> int& { return h.icaMaxIterations; });
    }
  }
  switch (id) {
    case MethodId::GMM:
      s["tolerance"] = real([](Hyperparameters& h) -> double& { return h.gmm.tolerance; });
      s["maxIterations"] = integer([](Hyperparameters& h) -> int& { return h.gmm.maxIterations; });
      s["regCovar"] = real([](Hyperparameters& h) -> double& { return h.gmm.regCovar; });
      break;
    case MethodId::FCM:
      s["fuzzifier"] = real([](Hyperparameters& h) -> double& { return h.fcm.fuzzifier; });
      s["tolerance"] = real([](Hyperparameters& h) -> double& { return h.fcm.tolerance; });
      s["maxIterations"] = integer([](Hyperparameters& h) -> int& { return h.fcm.maxIterations; });
      break;
    case MethodId::Birch:
      s["threshold"] = real([](Hyperparameters& h) -> double& { return h.birch.threshold; });
      s["branching"] = integer([](Hyperparameters& h) -> std::size_t& { return h.birch.branching; });
      break;
    case MethodId::Spectral:
      s["gamma"] = real([](Hyperparameters& h) -> double& { return h.spectral.gamma; });
      break;
    case MethodId::DBSCAN:
      s["eps"] = real([](Hyperparameters& h) -> double& { return h.dbscan.eps; });
      s["minPts"] = integer([](Hyperparameters& h) -> std::size_t& { return h.dbscan.minPts; });
      break;
    case MethodId::OPTICS:
      s["minPts"] = integer([](Hyperparameters& h) -> std::size_t& { return h.optics.minPts; });
      s["xi"] = real([](Hyperparameters& h) -> double& { return h.optics.xi; });
      break;
    case MethodId::MeanShift:
      s["bandwidth"] = [](Hyperparameters& h, double v) { h.meanShift.bandwidth = v; };
      s["quantile"] = real([](Hyperparameters& h) -> double& { return h.meanShift.quantile; });
      s["maxIterations"] = integer([](Hyperparameters& h) -> int& { return h.meanShift.maxIterations; });
      break;
    case MethodId::AP:
      s["damping"] = real([](Hyperparameters& h) -> double& { return h.ap.damping; });
      s["maxIterations"] = integer([](Hyperparameters& h) -> int& { return h.ap.maxIterations; });
      s["convergenceIterations"] = integer([](Hyperparameters& h) -> int& { return h.ap.convergenceIterations; });
      s["preference"] = [](Hyperparameters& h, double v) { h.ap.preference = v; };
      break;
    default:
      break;
  }
  return s;
}

inline const std::vector<std::string_view>& integerParams() {
  static const std::vector<std::string_view> names = {
      "restarts", "maxIterations", "batchSize", "maxEpochs", "maxNoImprovement", "components",
      "icaMaxIterations", "branching", "minPts", "convergenceIterations", "k"};
  return names;
}

}  // namespace detail

/// One `<method>.<param>=<value>` override.
struct HyperparameterOverride {
  MethodId method = MethodId::KMeans;
  std::string param;
  double value = 0.0;
};

inline HyperparameterOverride parseOverride(std::string_view text) {
  const auto dot = text.find('.');
  const auto eq = text.find('=');
  if (dot == std::string_view::npos || eq == std::string_view::npos || eq < dot || dot == 0 || eq == dot + 1)
    throw Error("malformed override '" + std::string(text) + "', expected <method>.<param>=<value>");
  HyperparameterOverride o;
  o.method = parseMethod(text.substr(0, dot));
  o.param = std::string(text.substr(dot + 1, eq - dot - 1));
  const std::string_view value = text.substr(eq + 1);
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), o.value);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(o.value))
    throw Error("override '" + std::string(text) + "': value is not a finite number");
  return o;
}

struct MethodSpec {
  MethodId id = MethodId::KMeans;
  std::optional<std::size_t> k;
  Hyperparameters hyperparameters;
  std::uint64_t seed = 0;
  bool standardize = false;

  void validate() const {
    if (methodTakesK(id)) {
      if (!k || *k < 1) throw Error(std::string(methodName(id)) + ": k must be given and >= 1");
    } else if (k) {
      throw Error(std::string(methodName(id)) + ": this method does not take k");
    }
  }
};

/// MethodSpec with default hyperparameters and k = 5 where the method takes one.
inline MethodSpec defaultSpec(MethodId id, std::uint64_t seed = 0) {
  MethodSpec s;
  s.id = id;
  s.seed = seed;
  if (methodTakesK(id)) s.k = kDefaultK;
  return s;
}

/// Applies an override addressed to `spec.id`; overrides for other methods are
/// ignored. The pseudo-parameter `k` sets the cluster count.
inline void applyOverride(MethodSpec& spec, const HyperparameterOverride& o) {
  if (o.method != spec.id) return;
  const bool integral = std::ranges::find(detail::integerParams(), std::string_view(o.param)) != detail::integerParams().end();
  if (integral) detail::requireIntegral(o.value, o.param);
  if (o.param == "k") {
    if (!methodTakesK(spec.id)) throw Error(std::string(methodName(spec.id)) + ": this method does not take k");
    spec.k = static_cast<std::size_t>(o.value);
    return;
  }
  const auto setters = detail::settersFor(spec.id);
  const auto it = setters.find(o.param);
  if (it == setters.end())
    throw Error(std::string(methodName(spec.id)) + ": unknown parameter '" + o.param + "'");
  it->second(spec.hyperparameters, o.value);
}

/// Rejects overrides that would not apply to any method.
inline void checkOverride(const HyperparameterOverride& o) {
  MethodSpec probe = defaultSpec(o.method);
  applyOverride(probe, o);
}

/// Column z-scores; a constant column is only centred.
inline Matrix standardizeColumns(const Matrix& x) {
  const auto mean = columnMeans(x);
  Matrix z = centered(x, mean);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double ss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) ss += z(i, j) * z(i, j);
    const double sd = x.rows() > 0 ? std::sqrt(ss / static_cast<double>(x.rows())) : 0.0;
    if (sd > 0.0)
      for (std::size_t i = 0; i < x.rows(); ++i) z(i, j) /= sd;
  }
  return z;
}

namespace detail {

inline double secondsSince(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline ClusterAssignment runBase(const MethodSpec& spec, const Matrix& x) {
  const Hyperparameters& h = spec.hyperparameters;
  const std::size_t k = spec.k.value_or(0);
  switch (spec.id) {
    case MethodId::KMeans:
    case MethodId::PcaKMeans:
    case MethodId::IcaKMeans: return kmeans(x, k, spec.seed, h.kmeans);
    case MethodId::MBK:
    case MethodId::PcaMBK:
    case MethodId::IcaMBK: return miniBatchKmeans(x, k, spec.seed, h.miniBatch);
    case MethodId::GMM: return gmmFit(x, k, spec.seed, h.gmm);
    case MethodId::AC: return wardAgglomerative(x, k);
    case MethodId::Spectral: return spectral(x, k, spec.seed, h.spectral);
    case MethodId::Birch: return birch(x, k, h.birch);
    case MethodId::AP: return affinityPropagation(x, spec.seed, h.ap);
    case MethodId::MeanShift: return meanShift(x, h.meanShift);
    case MethodId::DBSCAN: return dbscan(x, h.dbscan);
    case MethodId::OPTICS: return optics(x, h.optics);
    case MethodId::FCM: return fcm(x, k, spec.seed, h.fcm);
  }
  throw Error("runMethod: invalid method id");
}

}  // namespace detail

/// Runs one pipeline on the dataset's curves. Reduction and clustering are
/// timed separately with a monotonic clock; optional standardization happens
/// before either timer starts.
inline ClusterAssignment runMethod(const MethodSpec& spec, const TacDataset& ds) {
  const std::string who(methodName(spec.id));
  try {
    spec.validate();
    ds.validate();
    const Matrix base = spec.standardize ? standardizeColumns(ds.curves) : ds.curves;
    const Hyperparameters& h = spec.hyperparameters;

    std::optional<double> reduceSeconds;
    Matrix features;
    if (methodReduces(spec.id)) {
      const auto t0 = std::chrono::steady_clock::now();
      if (spec.id == MethodId::PcaKMeans || spec.id == MethodId::PcaMBK) {
        features = transformPca(fitPca(base, h.components), base);
      } else {
        IcaOptions opt;
        opt.components = h.components;
        opt.tolerance = h.icaTolerance;
        opt.maxIterations = h.icaMaxIterations;
        opt.seed = mixSeed(spec.seed, 0x1ca);
        features = transformIca(fitIca(base, opt), base);
      }
      reduceSeconds = detail::secondsSince(t0);
    }
    const Matrix& x = methodReduces(spec.id) ? features : base;

    const auto t1 = std::chrono::steady_clock::now();
    ClusterAssignment a = detail::runBase(spec, x);
    a.fitSeconds = detail::secondsSince(t1);
    a.reduceSeconds = reduceSeconds;
    return a;
  } catch (const std::exception& e) {
    throw Error(who + ": " + e.what());
  }
}

}  // namespace tacclust
