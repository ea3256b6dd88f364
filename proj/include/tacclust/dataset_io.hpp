#pragma once

// Plain-text dataset exchange.
//
//   <name>.csv            header `id,label,f00,...,f23`, one curve per row
//   <name>.schedule.json  {"durations": [...], "unit": "s", "patientId": "..."}
//
// Values are written in shortest round-trip form, so load(save(ds)) == ds.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "tacclust/error.hpp"
#include "tacclust/tacgen.hpp"

namespace tacclust {

namespace detail {

inline std::string formatDouble(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("formatDouble: conversion failed");
  return std::string(buf, end);
}

inline bool parseDouble(std::string_view text, double& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

inline std::vector<std::string_view> splitCsv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::string frameColumn(std::size_t f) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "f%02zu", f);
  return buf;
}

}  // namespace detail

inline std::filesystem::path scheduleSidecarPath(const std::filesystem::path& csvPath) {
  std::filesystem::path p = csvPath;
  p.replace_extension(".schedule.json");
  return p;
}

inline void saveSchedule(const FrameSchedule& schedule, const std::string& patientId,
                         const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["durations"] = schedule.durations();
  j["unit"] = "s";
  j["patientId"] = patientId;
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline void saveDataset(const TacDataset& ds, const std::filesystem::path& path) {
  ds.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "id,label";
  for (std::size_t f = 0; f < ds.schedule.count(); ++f) out << ',' << detail::frameColumn(f);
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << i << ',' << organName(ds.labels[i]);
    for (double v : ds.curves.row(i)) out << ',' << detail::formatDouble(v);
    out << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
  saveSchedule(ds.schedule, ds.patientId, scheduleSidecarPath(path));
}

/// Reads the schedule sidecar; returns the default schedule when absent.
inline FrameSchedule loadSchedule(const std::filesystem::path& sidecar, std::string* patientId = nullptr) {
  if (!std::filesystem::exists(sidecar)) return defaultFrameSchedule();
  std::ifstream in(sidecar);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, sidecar.string() + ": " + e.what());
  }
  if (!j.contains("durations") || !j["durations"].is_array())
    throw ParseError(0, sidecar.string() + ": missing 'durations' array");
  if (j.contains("unit") && j["unit"] != "s") throw ParseError(0, sidecar.string() + ": unit must be \"s\"");
  if (patientId != nullptr && j.contains("patientId")) *patientId = j["patientId"].get<std::string>();
  return FrameSchedule(j["durations"].get<std::vector<double>>());
}

inline TacDataset parseDataset(std::istream& in, const FrameSchedule& schedule, std::string patientId = {}) {
  TacDataset ds;
  ds.schedule = schedule;
  ds.patientId = std::move(patientId);
  const std::size_t frames = schedule.count();

  std::string line;
  std::size_t lineNo = 0;
  if (!std::getline(in, line)) throw ParseError(1, "no header");
  ++lineNo;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.empty()) throw ParseError(lineNo, "no header");
  {
    auto cols = detail::splitCsv(line);
    if (cols.size() < 2 || cols[0] != "id" || cols[1] != "label")
      throw ParseError(lineNo, "malformed header: expected 'id,label,f00,...'");
    if (cols.size() - 2 != frames)
      throw ParseError(lineNo, "header has " + std::to_string(cols.size() - 2) + " frame columns, schedule has " +
                                   std::to_string(frames));
    for (std::size_t f = 0; f < frames; ++f)
      if (cols[f + 2] != detail::frameColumn(f))
        throw ParseError(lineNo, "malformed header: expected column " + detail::frameColumn(f));
  }

  std::vector<double> values;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = detail::splitCsv(line);
    if (cols.size() != frames + 2)
      throw ParseError(lineNo, "expected " + std::to_string(frames) + " activity values, found " +
                                   std::to_string(cols.size() < 2 ? 0 : cols.size() - 2));
    Organ organ;
    try {
      organ = parseOrgan(cols[1]);
    } catch (const Error& e) {
      throw ParseError(lineNo, e.what());
    }
    for (std::size_t f = 0; f < frames; ++f) {
      double v = 0.0;
      if (!detail::parseDouble(cols[f + 2], v))
        throw ParseError(lineNo, "non-numeric activity '" + std::string(cols[f + 2]) + "'");
      if (!std::isfinite(v) || v < 0.0)
        throw ParseError(lineNo, "activity must be finite and >= 0, got '" + std::string(cols[f + 2]) + "'");
      values.push_back(v);
    }
    ds.labels.push_back(organ);
  }
  ds.curves = Matrix(ds.labels.size(), frames, std::move(values));
  return ds;
}

inline TacDataset loadDataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string patientId = path.stem().string();
  FrameSchedule schedule = loadSchedule(scheduleSidecarPath(path), &patientId);
  return parseDataset(in, schedule, std::move(patientId));
}

}  // namespace tacclust
