#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include "json.hpp"
#include "tacclust/bench/config.hpp"
#include "tacclust/bench/records.hpp"
#include "tacclust/dataset_io.hpp"
#include "tacclust/eval.hpp"
#include "tacclust/stats.hpp"
#include "tacclust/tacgen.hpp"

namespace tacclust::bench {

inline constexpr std::string_view kManifestFile = "manifest.json";
inline constexpr std::string_view kDataDir = "data";

struct ManifestEntry {
  std::string patientId;
  std::filesystem::path file;  // relative to the output directory
  std::uint64_t seed = 0;
};

/// Writes P datasets under <out>/data and a manifest listing them.
inline std::vector<ManifestEntry> cmdGenerate(const BenchConfig& config) {
  config.validate();
  const auto dataDir = config.outputDir / kDataDir;
  std::error_code ec;
  std::filesystem::create_directories(dataDir, ec);
  if (ec) throw Error("cannot create " + dataDir.string() + ": " + ec.message());

  SyntheticConfig syn;
  syn.curvesPerOrgan = config.curvesPerOrgan;
  const FrameSchedule schedule = defaultFrameSchedule();
  std::vector<ManifestEntry> entries;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (std::size_t p = 0; p < config.patients; ++p) {
    ManifestEntry e;
    e.patientId = patientId(p, config.patients);
    e.seed = patientSeed(config.seed, p);
    e.file = std::filesystem::path(kDataDir) / (e.patientId + ".csv");
    syn.seed = e.seed;
    saveDataset(generateDataset(syn, schedule, e.patientId), config.outputDir / e.file);
    files.push_back({{"patientId", e.patientId}, {"file", e.file.generic_string()}, {"seed", e.seed}});
    entries.push_back(std::move(e));
  }
  nlohmann::ordered_json manifest;
  manifest["seed"] = config.seed;
  manifest["patients"] = config.patients;
  manifest["curvesPerOrgan"] = config.curvesPerOrgan;
  manifest["frames"] = schedule.count();
  manifest["files"] = files;
  std::ofstream out(config.outputDir / kManifestFile, std::ios::binary);
  if (!out) throw Error("cannot write " + (config.outputDir / kManifestFile).string());
  out << manifest.dump(2) << '\n';
  return entries;
}

inline std::vector<ManifestEntry> readManifest(const std::filesystem::path& outputDir) {
  const auto path = outputDir / kManifestFile;
  std::ifstream in(path);
  if (!in) throw Error("missing manifest " + path.string() + " (run `generate` first)");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error("malformed manifest " + path.string() + ": " + e.what());
  }
  std::vector<ManifestEntry> entries;
  for (const auto& f : j.at("files"))
    entries.push_back({f.at("patientId").get<std::string>(), f.at("file").get<std::string>(), f.at("seed").get<std::uint64_t>()});
  return entries;
}

/// One pipeline on one dataset; a failure becomes a failed record.
inline RunRecord runOne(const BenchConfig& config, const TacDataset& ds, std::uint64_t patientSeedValue, MethodId id) {
  RunRecord r;
  r.patientId = ds.patientId;
  r.method = id;
  try {
    const ClusterAssignment a = runMethod(specFor(config, id, methodSeed(patientSeedValue, id)), ds);
    r.kFoundRaw = a.kFound;
    r.report = bestMatching(canonicalize(a), ds.labels);
    r.fitSeconds = a.fitSeconds;
    r.reduceSeconds = a.reduceSeconds;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

/// Runs every (patient, method) pair of the manifest, patient-major. All
/// datasets are loaded before the first fit. Timed mode is sequential;
/// `config.parallel` spreads pairs over threads and makes the timings
/// unsuitable for comparison.
inline std::vector<RunRecord> cmdRun(const BenchConfig& config, std::ostream* log = nullptr) {
  config.validate();
  const auto entries = readManifest(config.outputDir);
  std::vector<TacDataset> datasets;
  for (const auto& e : entries) {
    const auto path = config.outputDir / e.file;
    if (!std::filesystem::exists(path)) throw Error("missing dataset " + path.string());
  }
  for (const auto& e : entries) {
    datasets.push_back(loadDataset(config.outputDir / e.file));
    datasets.back().patientId = e.patientId;
  }

  const std::size_t methods = config.methods.size();
  std::vector<RunRecord> records(entries.size() * methods);
  std::mutex logMutex;
  auto work = [&](std::size_t job) {
    const std::size_t p = job / methods;
    const MethodId id = config.methods[job % methods];
    records[job] = runOne(config, datasets[p], entries[p].seed, id);
    if (log != nullptr) {
      const RunRecord& r = records[job];
      std::lock_guard lock(logMutex);
      *log << r.patientId << ' ' << methodName(id) << ' ';
      if (r.ok) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "k=%d acc=%.3f t=%.3fs", r.kFoundRaw, r.report.accuracy, r.totalSeconds());
        *log << buf << '\n';
      } else {
        *log << "FAILED: " << r.error << '\n';
      }
    }
  };

  if (config.parallel) {
    if (log != nullptr) *log << "note: parallel mode, timings are not comparable\n";
    std::atomic<std::size_t> next{0};
    const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t job = next++; job < records.size(); job = next++) work(job);
      });
    for (auto& t : pool) t.join();
  } else {
    for (std::size_t job = 0; job < records.size(); ++job) work(job);
  }
  saveRecords(records, config.outputDir);
  return records;
}

// --- reports --------------------------------------------------------------

namespace detail {

inline std::vector<MethodId> methodsInOrder(const std::vector<RunRecord>& records) {
  std::vector<MethodId> out;
  for (const auto& r : records)
    if (std::ranges::find(out, r.method) == out.end()) out.push_back(r.method);
  return out;
}

inline std::vector<const RunRecord*> okRecords(const std::vector<RunRecord>& records, MethodId id) {
  std::vector<const RunRecord*> out;
  for (const auto& r : records)
    if (r.method == id && r.ok) out.push_back(&r);
  return out;
}

inline std::size_t failedCount(const std::vector<RunRecord>& records, MethodId id) {
  return static_cast<std::size_t>(std::ranges::count_if(records, [id](const RunRecord& r) { return r.method == id && !r.ok; }));
}

inline std::string percentCell(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * fraction);
  return 100.0 * fraction > 75.0 ? "**" + std::string(buf) + "**" : std::string(buf);
}

inline std::string arrow(Direction d) {
  return d == Direction::FirstHigher ? "↑" : d == Direction::SecondHigher ? "↓" : "";
}

inline void openOut(std::ofstream& out, const std::filesystem::path& path) {
  out.open(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
}

// Accuracies of two methods over the patients where both succeeded.
inline std::pair<std::vector<double>, std::vector<double>> pairedAccuracies(const std::vector<RunRecord>& records,
                                                                           MethodId a, MethodId b) {
  std::map<std::string, double> first;
  for (const RunRecord* r : okRecords(records, a)) first[r->patientId] = r->report.accuracy;
  std::pair<std::vector<double>, std::vector<double>> out;
  for (const RunRecord* r : okRecords(records, b)) {
    const auto it = first.find(r->patientId);
    if (it == first.end()) continue;
    out.first.push_back(it->second);
    out.second.push_back(r->report.accuracy);
  }
  return out;
}

}  // namespace detail

struct ReportFiles {
  std::filesystem::path mediansMd, mediansCsv, significanceMd, significanceCsv, timingMd, timingCsv;
};

/// Writes the medians, significance and timing tables (Markdown and CSV) into
/// `dir`. Failed runs are left out of every statistic and counted in the
/// tables.
inline ReportFiles cmdReport(const std::vector<RunRecord>& records, const std::filesystem::path& dir,
                             MethodId refMethod = MethodId::GMM) {
  using tacclust::detail::formatDouble;
  if (records.empty()) throw Error("report: no run records");
  std::filesystem::create_directories(dir);
  const auto methods = detail::methodsInOrder(records);
  ReportFiles files{dir / "medians.md", dir / "medians.csv", dir / "significance.md",
                    dir / "significance.csv", dir / "timing.md", dir / "timing.csv"};

  // Medians.
  {
    std::ofstream md;
    std::ofstream csv;
    detail::openOut(md, files.mediansMd);
    detail::openOut(csv, files.mediansCsv);
    md << "# Median accuracy, precision and recall (%)\n\nValues over 75% are in bold.\n\n| Method | n | Accuracy |";
    for (Organ o : kAllOrgans) md << ' ' << organName(o) << " P | " << organName(o) << " R |";
    md << "\n|---|---|---|";
    for (std::size_t o = 0; o < kOrganCount; ++o) md << "---|---|";
    md << '\n';
    csv << "method,patients,failed,accuracy_median,accuracy_sd";
    for (Organ o : kAllOrgans) csv << ",precision_" << organName(o) << "_median,precision_" << organName(o) << "_sd";
    for (Organ o : kAllOrgans) csv << ",recall_" << organName(o) << "_median,recall_" << organName(o) << "_sd";
    csv << '\n';
    std::size_t totalFailed = 0;
    for (MethodId id : methods) {
      const auto ok = detail::okRecords(records, id);
      const std::size_t failed = detail::failedCount(records, id);
      totalFailed += failed;
      md << "| " << methodDisplayName(id) << " | " << ok.size() << " |";
      csv << methodName(id) << ',' << ok.size() << ',' << failed;
      if (ok.empty()) {
        md << " - |";
        for (std::size_t o = 0; o < 2 * kOrganCount; ++o) md << " - |";
        md << '\n';
        csv << std::string(2 + 4 * kOrganCount, ',') << '\n';
        continue;
      }
      std::vector<EvalReport> reports;
      for (const RunRecord* r : ok) reports.push_back(r->report);
      const PatientSummary s = summarizeOverPatients(reports);
      md << ' ' << detail::percentCell(s.accuracy.median) << " |";
      for (std::size_t o = 0; o < kOrganCount; ++o)
        md << ' ' << detail::percentCell(s.precision[o].median) << " | " << detail::percentCell(s.recall[o].median) << " |";
      md << '\n';
      csv << ',' << formatDouble(s.accuracy.median) << ',' << formatDouble(s.accuracy.sd);
      for (const auto& m : s.precision) csv << ',' << formatDouble(m.median) << ',' << formatDouble(m.sd);
      for (const auto& m : s.recall) csv << ',' << formatDouble(m.median) << ',' << formatDouble(m.sd);
      csv << '\n';
    }
    if (totalFailed > 0) md << "\n" << totalFailed << " failed run(s) excluded.\n";
  }

  // Pairwise accuracy significance.
  {
    std::ofstream md;
    std::ofstream csv;
    detail::openOut(md, files.significanceMd);
    detail::openOut(csv, files.significanceCsv);
    const std::size_t m = methods.size() * (methods.size() - 1) / 2;
    md << "# Pairwise accuracy comparison (Wilcoxon signed-rank)\n\n";
    csv << "methodA,methodB,pairs,statistic,pValue,direction,stars\n";
    if (m == 0) {
      md << "Fewer than two methods: nothing to compare.\n";
    } else {
      md << "Bonferroni m = " << m << ". ↑: row method higher, ↓: row method lower; * p ≤ 0.05/m, ** p ≤ 0.01/m, "
         << "*** p ≤ 0.001/m.\n\n| |";
      for (MethodId id : methods) md << ' ' << methodDisplayName(id) << " |";
      md << "\n|---|";
      for (std::size_t i = 0; i < methods.size(); ++i) md << "---|";
      md << '\n';
      std::map<std::pair<std::size_t, std::size_t>, TestResult> results;
      for (std::size_t i = 0; i < methods.size(); ++i)
        for (std::size_t j = i + 1; j < methods.size(); ++j) {
          const auto [x, y] = detail::pairedAccuracies(records, methods[i], methods[j]);
          csv << methodName(methods[i]) << ',' << methodName(methods[j]) << ',' << x.size() << ',';
          if (x.empty()) {
            csv << ",,,\n";
            continue;
          }
          const TestResult t = wilcoxonSignedRank(x, y);
          results[{i, j}] = t;
          csv << formatDouble(t.statistic) << ',' << formatDouble(t.pValue) << ',' << directionName(t.direction) << ','
              << starString(bonferroniStar(t.pValue, m).level) << '\n';
        }
      for (std::size_t i = 0; i < methods.size(); ++i) {
        md << "| " << methodDisplayName(methods[i]) << " |";
        for (std::size_t j = 0; j < methods.size(); ++j) {
          if (i == j) {
            md << " - |";
            continue;
          }
          const auto it = results.find({std::min(i, j), std::max(i, j)});
          if (it == results.end()) {
            md << " n/a |";
            continue;
          }
          Direction d = it->second.direction;
          if (i > j) d = d == Direction::FirstHigher ? Direction::SecondHigher : d == Direction::SecondHigher ? Direction::FirstHigher : d;
          md << ' ' << detail::arrow(d) << starString(bonferroniStar(it->second.pValue, m).level) << " |";
        }
        md << '\n';
      }
    }
  }

  // Timing.
  {
    std::ofstream md;
    std::ofstream csv;
    detail::openOut(md, files.timingMd);
    detail::openOut(csv, files.timingCsv);
    const bool haveRef = std::ranges::find(methods, refMethod) != methods.end();
    const std::size_t m = methods.size() > 1 ? methods.size() - 1 : 0;
    std::vector<double> refTimes;
    for (const RunRecord* r : detail::okRecords(records, refMethod)) refTimes.push_back(r->totalSeconds());
    md << "# Mean processing time (s)\n\n";
    if (haveRef && m > 0)
      md << "Two-sided t-test against " << methodDisplayName(refMethod) << ", Bonferroni m = " << m
         << ". ↑: slower, ↓: faster than the reference. Reduction pipelines show reduction+clustering.\n\n";
    else
      md << "No reference comparison (reference method " << methodName(refMethod) << " absent or only one method).\n\n";
    md << "| Method | n | Time | vs ref |\n|---|---|---|---|\n";
    csv << "method,runs,meanReduceSeconds,meanFitSeconds,meanTotalSeconds,statistic,pValue,direction,stars\n";
    for (MethodId id : methods) {
      const auto ok = detail::okRecords(records, id);
      md << "| " << methodDisplayName(id) << " | " << ok.size() << " | ";
      csv << methodName(id) << ',' << ok.size() << ',';
      if (ok.empty()) {
        md << "- | |\n";
        csv << ",,,,,,\n";
        continue;
      }
      double fit = 0.0;
      double reduce = 0.0;
      bool reduces = false;
      std::vector<double> totals;
      for (const RunRecord* r : ok) {
        fit += r->fitSeconds;
        reduce += r->reduceSeconds.value_or(0.0);
        reduces = reduces || r->reduceSeconds.has_value();
        totals.push_back(r->totalSeconds());
      }
      const double n = static_cast<double>(ok.size());
      fit /= n;
      reduce /= n;
      char buf[64];
      if (reduces)
        std::snprintf(buf, sizeof(buf), "%.3f+%.3f", reduce, fit);
      else
        std::snprintf(buf, sizeof(buf), "%.3f", fit);
      md << buf << " | ";
      csv << (reduces ? formatDouble(reduce) : "") << ',' << formatDouble(fit) << ',' << formatDouble(reduce + fit) << ',';
      if (id == refMethod) {
        md << "ref |\n";
        csv << ",,,\n";
        continue;
      }
      if (!haveRef || m == 0 || totals.size() < 2 || refTimes.size() < 2) {
        md << " |\n";
        csv << ",,,\n";
        continue;
      }
      const TestResult t = twoSampleTTest(totals, refTimes);
      const auto stars = starString(bonferroniStar(t.pValue, m).level);
      md << detail::arrow(t.direction) << stars << " |\n";
      csv << formatDouble(t.statistic) << ',' << formatDouble(t.pValue) << ',' << directionName(t.direction) << ','
          << stars << '\n';
    }
  }
  return files;
}

struct StarredResult {
  TestResult test;
  StarLevel stars;
};

struct StatsTriple {
  StarredResult wilcoxon;  // paired accuracies
  StarredResult ftest;     // accuracy variances
  StarredResult ttest;     // total processing times
  std::size_t patients = 0;
};

/// Compares two methods over the patients where each succeeded; the two
/// patient sets must coincide.
inline StatsTriple cmdStats(const std::vector<RunRecord>& records, MethodId a, MethodId b, std::size_t m = 1) {
  auto collect = [&](MethodId id) {
    std::map<std::string, const RunRecord*> out;
    for (const RunRecord* r : detail::okRecords(records, id)) out[r->patientId] = r;
    return out;
  };
  const auto ra = collect(a);
  const auto rb = collect(b);
  if (ra.empty()) throw Error("stats: no successful runs for " + std::string(methodName(a)));
  std::set<std::string> pa;
  std::set<std::string> pb;
  for (const auto& [k, v] : ra) pa.insert(k);
  for (const auto& [k, v] : rb) pb.insert(k);
  if (pa != pb)
    throw Error("stats: " + std::string(methodName(a)) + " and " + std::string(methodName(b)) + " cover different patients");
  std::vector<double> accA, accB, timeA, timeB;
  for (const auto& [patient, r] : ra) {
    accA.push_back(r->report.accuracy);
    accB.push_back(rb.at(patient)->report.accuracy);
    timeA.push_back(r->totalSeconds());
    timeB.push_back(rb.at(patient)->totalSeconds());
  }
  StatsTriple s;
  s.patients = accA.size();
  s.wilcoxon.test = wilcoxonSignedRank(accA, accB);
  s.ftest.test = fTestVarianceEquality(accA, accB);
  s.ttest.test = twoSampleTTest(timeA, timeB);
  for (StarredResult* r : {&s.wilcoxon, &s.ftest, &s.ttest}) r->stars = bonferroniStar(r->test.pValue, m);
  return s;
}

inline nlohmann::ordered_json statsToJson(const StatsTriple& s, MethodId a, MethodId b) {
  auto one = [](const StarredResult& r) {
    nlohmann::ordered_json j;
    j["method"] = testMethodName(r.test.method);
    j["statistic"] = r.test.statistic;
    j["pValue"] = r.test.pValue;
    j["direction"] = directionName(r.test.direction);
    j["stars"] = starString(r.stars.level);
    j["m"] = r.stars.m;
    return j;
  };
  nlohmann::ordered_json j;
  j["methodA"] = methodName(a);
  j["methodB"] = methodName(b);
  j["patients"] = s.patients;
  j["wilcoxonAccuracy"] = one(s.wilcoxon);
  j["fTestAccuracy"] = one(s.ftest);
  j["tTestTime"] = one(s.ttest);
  return j;
}

}  // namespace tacclust::bench
