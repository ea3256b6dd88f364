#pragma once

// Run records and their two CSV files:
//   runs.csv     deterministic results, one row per (patient, method)
//   timings.csv  wall-clock seconds for the same rows

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tacclust/bench/config.hpp"
#include "tacclust/dataset_io.hpp"
#include "tacclust/eval.hpp"

namespace tacclust::bench {

struct RunRecord {
  std::string patientId;
  MethodId method = MethodId::KMeans;
  bool ok = true;
  std::string error;
  int kFoundRaw = 0;
  EvalReport report;
  double fitSeconds = 0.0;
  std::optional<double> reduceSeconds;

  double totalSeconds() const { return fitSeconds + reduceSeconds.value_or(0.0); }
};

namespace detail {

inline std::string sanitizeField(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = c == ',' ? ';' : ' ';
  return s;
}

inline std::string joinInts(const auto& values) {
  std::string out;
  for (auto v : values) {
    if (!out.empty()) out += ' ';
    out += std::to_string(v);
  }
  return out;
}

inline std::vector<long> splitInts(std::string_view text, std::size_t expected, std::size_t line) {
  std::vector<long> out;
  std::istringstream in{std::string(text)};
  long v = 0;
  while (in >> v) out.push_back(v);
  if (out.size() != expected || !in.eof()) throw ParseError(line, "expected " + std::to_string(expected) + " integers");
  return out;
}

inline double parseField(std::string_view text, std::size_t line, std::string_view column) {
  double v = 0.0;
  if (!tacclust::detail::parseDouble(text, v))
    throw ParseError(line, "column " + std::string(column) + ": not a number: '" + std::string(text) + "'");
  return v;
}

inline std::vector<std::string> runsHeader() {
  std::vector<std::string> h = {"patientId", "method", "status", "kFoundRaw", "accuracy"};
  for (Organ o : kAllOrgans) h.push_back("precision_" + std::string(organName(o)));
  for (Organ o : kAllOrgans) h.push_back("recall_" + std::string(organName(o)));
  h.insert(h.end(), {"matching", "confusion", "error"});
  return h;
}

inline std::string joinHeader(const std::vector<std::string>& h) {
  std::string out;
  for (const auto& s : h) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace detail

inline constexpr std::string_view kRunsFile = "runs.csv";
inline constexpr std::string_view kTimingsFile = "timings.csv";

inline void writeRuns(const std::vector<RunRecord>& records, std::ostream& out) {
  using tacclust::detail::formatDouble;
  out << detail::joinHeader(detail::runsHeader()) << '\n';
  for (const auto& r : records) {
    out << r.patientId << ',' << methodName(r.method) << ',' << (r.ok ? "ok" : "failed") << ',';
    if (r.ok) {
      out << r.kFoundRaw << ',' << formatDouble(r.report.accuracy);
      for (double v : r.report.precision) out << ',' << formatDouble(v);
      for (double v : r.report.recall) out << ',' << formatDouble(v);
      std::vector<std::size_t> flat;
      for (const auto& row : r.report.confusion) flat.insert(flat.end(), row.begin(), row.end());
      out << ',' << detail::joinInts(r.report.matching) << ',' << detail::joinInts(flat) << ',';
    } else {
      out << std::string(1 + 2 * kOrganCount + 3, ',');
      out << detail::sanitizeField(r.error);
    }
    out << '\n';
  }
}

inline void writeTimings(const std::vector<RunRecord>& records, std::ostream& out) {
  using tacclust::detail::formatDouble;
  out << "patientId,method,fitSeconds,reduceSeconds\n";
  for (const auto& r : records) {
    out << r.patientId << ',' << methodName(r.method) << ',';
    if (r.ok) {
      out << formatDouble(r.fitSeconds) << ',';
      if (r.reduceSeconds) out << formatDouble(*r.reduceSeconds);
    } else {
      out << ',';
    }
    out << '\n';
  }
}

inline void saveRecords(const std::vector<RunRecord>& records, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream runs(dir / kRunsFile, std::ios::binary);
  std::ofstream timings(dir / kTimingsFile, std::ios::binary);
  if (!runs || !timings) throw Error("cannot write run records to " + dir.string());
  writeRuns(records, runs);
  writeTimings(records, timings);
  if (!runs || !timings) throw Error("failed while writing run records to " + dir.string());
}

/// Reads runs.csv, joining timings.csv when given.
inline std::vector<RunRecord> parseRecords(std::istream& runs, std::istream* timings = nullptr) {
  std::vector<RunRecord> records;
  std::string line;
  std::size_t lineNo = 1;
  if (!std::getline(runs, line)) throw ParseError(1, "runs file has no header");
  const auto header = detail::runsHeader();
  if (line != detail::joinHeader(header)) throw ParseError(1, "unexpected runs header");
  while (std::getline(runs, line)) {
    ++lineNo;
    if (line.empty()) continue;
    const auto f = tacclust::detail::splitCsv(line);
    if (f.size() != header.size()) throw ParseError(lineNo, "expected " + std::to_string(header.size()) + " fields");
    RunRecord r;
    r.patientId = std::string(f[0]);
    r.method = parseMethod(f[1]);
    if (f[2] != "ok" && f[2] != "failed") throw ParseError(lineNo, "status must be ok or failed");
    r.ok = f[2] == "ok";
    r.error = std::string(f.back());
    if (r.ok) {
      r.kFoundRaw = static_cast<int>(detail::parseField(f[3], lineNo, "kFoundRaw"));
      r.report.accuracy = detail::parseField(f[4], lineNo, "accuracy");
      for (std::size_t o = 0; o < kOrganCount; ++o) {
        r.report.precision[o] = detail::parseField(f[5 + o], lineNo, header[5 + o]);
        r.report.recall[o] = detail::parseField(f[5 + kOrganCount + o], lineNo, header[5 + kOrganCount + o]);
      }
      const auto m = detail::splitInts(f[5 + 2 * kOrganCount], kOrganCount, lineNo);
      const auto c = detail::splitInts(f[6 + 2 * kOrganCount], kOrganCount * kOrganCount, lineNo);
      for (std::size_t i = 0; i < kOrganCount; ++i) {
        r.report.matching[i] = static_cast<int>(m[i]);
        for (std::size_t j = 0; j < kOrganCount; ++j) {
          r.report.confusion[i][j] = static_cast<std::size_t>(c[i * kOrganCount + j]);
          r.report.n += r.report.confusion[i][j];
        }
      }
    }
    records.push_back(std::move(r));
  }

  if (timings != nullptr) {
    std::map<std::pair<std::string, MethodId>, std::size_t> index;
    for (std::size_t i = 0; i < records.size(); ++i) index[{records[i].patientId, records[i].method}] = i;
    lineNo = 1;
    if (!std::getline(*timings, line) || line != "patientId,method,fitSeconds,reduceSeconds")
      throw ParseError(1, "unexpected timings header");
    while (std::getline(*timings, line)) {
      ++lineNo;
      if (line.empty()) continue;
      const auto f = tacclust::detail::splitCsv(line);
      if (f.size() != 4) throw ParseError(lineNo, "expected 4 fields");
      const auto it = index.find({std::string(f[0]), parseMethod(f[1])});
      if (it == index.end()) throw ParseError(lineNo, "timing row has no matching run row");
      RunRecord& r = records[it->second];
      if (!r.ok) continue;
      r.fitSeconds = detail::parseField(f[2], lineNo, "fitSeconds");
      if (!f[3].empty()) r.reduceSeconds = detail::parseField(f[3], lineNo, "reduceSeconds");
    }
  }
  return records;
}

inline std::vector<RunRecord> loadRecords(const std::filesystem::path& dir) {
  std::ifstream runs(dir / kRunsFile, std::ios::binary);
  if (!runs) throw Error("cannot open " + (dir / kRunsFile).string());
  std::ifstream timings(dir / kTimingsFile, std::ios::binary);
  return parseRecords(runs, timings ? &timings : nullptr);
}

}  // namespace tacclust::bench
