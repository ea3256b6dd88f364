// tacbench: generate synthetic TAC datasets, run the clustering matrix, and
// write report tables.
//
//   tacbench generate --patients 30 --seed 42 --out bench_out
//   tacbench run      --out bench_out [--methods GMM,FCM] [--set DBSCAN.eps=2]
//   tacbench report   --out bench_out [--ref-method GMM]
//   tacbench stats    --out bench_out --a GMM --b FCM [--m 105]

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tacclust/bench/commands.hpp"

namespace {

using tacclust::bench::BenchConfig;

struct Options {
  std::uint64_t seed = 0;
  std::size_t patients = 30;
  std::size_t curvesPerOrgan = 1000;
  std::string methods;
  std::string out = "bench_out";
  bool standardize = false;
  bool parallel = false;
  bool quiet = false;
  std::string refMethod = "GMM";
  std::vector<std::string> overrides;
  std::string methodA;
  std::string methodB;
  std::size_t m = 1;
};

BenchConfig toConfig(const Options& o) {
  BenchConfig c;
  c.seed = o.seed;
  c.patients = o.patients;
  c.curvesPerOrgan = o.curvesPerOrgan;
  if (!o.methods.empty()) c.methods = tacclust::bench::parseMethodList(o.methods);
  c.outputDir = o.out;
  c.standardize = o.standardize;
  c.parallel = o.parallel;
  c.refMethod = tacclust::parseMethod(o.refMethod);
  for (const auto& s : o.overrides) c.overrides.push_back(tacclust::parseOverride(s));
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic dynamic-PET TAC clustering benchmark"};
  app.require_subcommand(1);
  Options o;

  auto* generate = app.add_subcommand("generate", "Write P synthetic datasets and a manifest");
  generate->add_option("--seed", o.seed, "Master seed");
  generate->add_option("--patients", o.patients, "Number of datasets")->check(CLI::PositiveNumber);
  generate->add_option("--curves-per-organ", o.curvesPerOrgan, "Curves per organ")->check(CLI::PositiveNumber);
  generate->add_option("--out", o.out, "Output directory");

  auto* run = app.add_subcommand("run", "Run every (dataset, method) pair of the manifest");
  run->add_option("--methods", o.methods, "Comma-separated method ids (default: all 15)");
  run->add_option("--out", o.out, "Directory holding the manifest; results are written here");
  run->add_flag("--standardize", o.standardize, "Z-score each frame before clustering");
  run->add_flag("--parallel", o.parallel, "Run pairs concurrently (timings become incomparable)");
  run->add_option("--set", o.overrides, "Hyperparameter override <method>.<param>=<value>");
  run->add_option("--seed", o.seed, "Unused by run; datasets carry their own seeds");
  run->add_flag("--quiet", o.quiet, "No per-run progress lines");

  auto* report = app.add_subcommand("report", "Write medians, significance and timing tables");
  report->add_option("--out", o.out, "Directory holding runs.csv and timings.csv");
  report->add_option("--ref-method", o.refMethod, "Reference method for the timing t-tests");

  auto* stats = app.add_subcommand("stats", "Compare two methods (Wilcoxon, F-test, t-test) as JSON");
  stats->add_option("--out", o.out, "Directory holding runs.csv and timings.csv");
  stats->add_option("--a", o.methodA, "First method id")->required();
  stats->add_option("--b", o.methodB, "Second method id")->required();
  stats->add_option("--m", o.m, "Bonferroni test count")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      const auto entries = tacclust::bench::cmdGenerate(toConfig(o));
      std::cout << "wrote " << entries.size() << " dataset(s) to " << o.out << '\n';
    } else if (*run) {
      const auto records = tacclust::bench::cmdRun(toConfig(o), o.quiet ? nullptr : &std::cerr);
      const auto failed = std::ranges::count_if(records, [](const auto& r) { return !r.ok; });
      std::cout << "wrote " << records.size() << " record(s), " << failed << " failed\n";
    } else if (*report) {
      const BenchConfig c = toConfig(o);
      const auto files = tacclust::bench::cmdReport(tacclust::bench::loadRecords(c.outputDir), c.outputDir, c.refMethod);
      std::cout << "wrote " << files.mediansMd.string() << ", " << files.significanceMd.string() << ", "
                << files.timingMd.string() << " (and CSV twins)\n";
    } else if (*stats) {
      const auto a = tacclust::parseMethod(o.methodA);
      const auto b = tacclust::parseMethod(o.methodB);
      const auto triple = tacclust::bench::cmdStats(tacclust::bench::loadRecords(o.out), a, b, o.m);
      std::cout << tacclust::bench::statsToJson(triple, a, b).dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "tacbench: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
