#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tacclust/cluster/methods.hpp"
#include "tacclust/rng.hpp"

namespace tacclust::bench {

struct BenchConfig {
  std::vector<MethodId> methods{kAllMethods.begin(), kAllMethods.end()};
  std::size_t patients = 30;
  std::uint64_t seed = 0;
  std::size_t curvesPerOrgan = 1000;
  std::filesystem::path outputDir = "bench_out";
  bool standardize = false;
  bool parallel = false;
  MethodId refMethod = MethodId::GMM;
  std::vector<HyperparameterOverride> overrides;

  void validate() const {
    if (patients < 1) throw Error("BenchConfig: patients must be >= 1");
    if (methods.empty()) throw Error("BenchConfig: no methods selected");
    if (curvesPerOrgan < 1) throw Error("BenchConfig: curvesPerOrgan must be >= 1");
    for (const auto& o : overrides) checkOverride(o);
  }
};

/// "P01", "P02", ...; wider when there are more than 99 patients.
inline std::string patientId(std::size_t index, std::size_t patients) {
  const std::size_t width = std::max<std::size_t>(2, std::to_string(patients).size());
  std::string digits = std::to_string(index + 1);
  return "P" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

inline std::uint64_t patientSeed(std::uint64_t master, std::size_t index) { return mixSeed(master, index + 1); }

inline std::uint64_t methodSeed(std::uint64_t patientSeed, MethodId id) {
  return mixSeed(patientSeed, hashString(methodName(id)));
}

inline MethodSpec specFor(const BenchConfig& config, MethodId id, std::uint64_t seed) {
  MethodSpec spec = defaultSpec(id, seed);
  spec.standardize = config.standardize;
  for (const auto& o : config.overrides) applyOverride(spec, o);
  return spec;
}

inline std::vector<MethodId> parseMethodList(std::string_view list) {
  std::vector<MethodId> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    std::string_view item = list.substr(start, comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) throw Error("empty entry in method list");
    const MethodId id = parseMethod(item);
    if (std::ranges::find(out, id) == out.end()) out.push_back(id);
    start = comma + 1;
  }
  return out;
}

}  // namespace tacclust::bench
