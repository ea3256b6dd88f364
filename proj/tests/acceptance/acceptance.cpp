// Acceptance run: one PASS/FAIL line per criterion, exit code 1 if any fails.
//
//   acceptance [work-dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "../oracles.hpp"
#include "../test_support.hpp"
#include "tacclust/bench/commands.hpp"
#include "tacclust/cluster/fcm.hpp"
#include "tacclust/cluster/gmm.hpp"
#include "tacclust/cluster/kmeans.hpp"
#include "tacclust/cluster/spectral.hpp"
#include "tacclust/cluster/ward.hpp"
#include "tacclust/linalg.hpp"
#include "tacclust/reduce.hpp"
#include "tacclust/stats.hpp"

using namespace tacclust;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double seconds(Clock::time_point since) { return std::chrono::duration<double>(Clock::now() - since).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<int> balancedTruth(std::size_t perOrgan) {
  std::vector<int> t;
  for (int o = 0; o < 5; ++o) t.insert(t.end(), perOrgan, o);
  return t;
}

Outcome singleClusterParity() {
  Outcome o;
  for (std::size_t per : {1, 10, 1000}) {
    const std::vector<int> truth = balancedTruth(per);
    const ClusterAssignment a = makeAssignment(std::vector<int>(truth.size(), 0));
    const EvalReport r = bestMatching(canonicalize(a), truth);
    const auto matched = static_cast<std::size_t>(r.matching[0]);
    o.require(100.0 * r.accuracy == 20.0, "accuracy " + fmt("%.17g", r.accuracy));
    o.require(100.0 * r.recall[matched] == 100.0 && 100.0 * r.precision[matched] == 20.0, "matched organ P/R");
    for (std::size_t g = 0; g < kOrganCount; ++g)
      if (g != matched) o.require(r.precision[g] == 0.0 && r.recall[g] == 0.0, "unmatched organ nonzero");
  }
  if (o.pass) o.detail = "accuracy 20.0%, P 20.0%, R 100.0%, others 0.0";
  return o;
}

Outcome frameSchedule() {
  Outcome o;
  const FrameSchedule s = defaultFrameSchedule();
  o.require(s.count() == 24, "frame count " + std::to_string(s.count()));
  const std::vector<std::pair<std::size_t, double>> marks = {{4, 20}, {7, 35}, {10, 50}, {19, 140}, {24, 280}};
  double end = 0.0;
  std::size_t frame = 0;
  for (double d : s.durations()) {
    end += d;
    ++frame;
    for (auto [f, t] : marks)
      if (f == frame) o.require(end == t, "frame " + std::to_string(f) + " ends at " + fmt("%g", end));
  }
  if (o.pass) o.detail = "24 frames; ends 20/35/50/140/280 s";
  return o;
}

Outcome oracleEquivalences() {
  Outcome o;
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> label(0, 4);

  auto t0 = Clock::now();
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 40)(gen);
    std::vector<int> truth(n);
    std::vector<int> pred(n);
    for (auto& v : truth) v = label(gen);
    for (auto& v : pred) v = label(gen);
    CanonicalClustering c;
    c.labels = pred;
    const EvalReport r = bestMatching(c, truth);
    const oracle::MatchResult m = oracle::exhaustiveMatch(pred, truth);
    o.require(r.matching == m.perm && r.accuracy == static_cast<double>(m.correct) / static_cast<double>(n),
              "matching differs from oracle");
  }
  const double tMatch = seconds(t0);

  t0 = Clock::now();
  double distErr = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix x = testsupport::randomMatrix(30 + s, 24, s, 50.0);
    const Matrix a = pairwiseSqDist(x);
    const Matrix b = oracle::naiveSqDist(x);
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) distErr = std::max(distErr, std::abs(a(i, j) - b(i, j)) / std::max(1.0, b(i, j)));
  }
  o.require(distErr <= 1e-10, "pairwise distance error " + fmt("%.3g", distErr));
  const double tDist = seconds(t0);

  t0 = Clock::now();
  double wilErr = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 12)(gen);
    std::vector<double> ranks(n);
    for (auto& r : ranks) r = 0.5 * std::uniform_int_distribution<int>(2, 2 * static_cast<int>(n))(gen);
    double total = 0.0;
    for (double r : ranks) total += r;
    const double w = 0.5 * std::uniform_int_distribution<int>(0, static_cast<int>(total))(gen);
    wilErr = std::max(wilErr, std::abs(wilcoxonExactP(ranks, w) - oracle::wilcoxonEnumerate(ranks, w)));
  }
  o.require(wilErr <= 1e-12, "Wilcoxon error " + fmt("%.3g", wilErr));
  const double tWil = seconds(t0);

  t0 = Clock::now();
  double tErr = 0.0;
  double fErr = 0.0;
  for (double df : {1.5, 4.0, 9.3, 28.0})
    for (double t : {0.2, 1.1, 2.4, 4.5}) tErr = std::max(tErr, std::abs(studentTwoSided(t, df) - oracle::studentTwoSidedQuadrature(t, df)));
  for (auto [d1, d2] : {std::pair{2.0, 3.0}, {5.0, 9.0}, {29.0, 29.0}})
    for (double f : {0.3, 1.0, 2.7}) fErr = std::max(fErr, std::abs(fisherCdf(f, d1, d2) - oracle::fisherCdfQuadrature(f, d1, d2)));
  o.require(tErr <= 1e-6, "t p-value error " + fmt("%.3g", tErr));
  o.require(fErr <= 1e-6, "F cdf error " + fmt("%.3g", fErr));
  const double tQuad = seconds(t0);

  for (double t : {tMatch, tDist, tWil, tQuad}) o.require(t <= 1.0, "an oracle suite exceeded 1 s");
  if (o.pass)
    o.detail = "match " + fmt("%.3fs", tMatch) + ", dist " + fmt("%.1e", distErr) + ", wilcoxon " + fmt("%.1e", wilErr) +
               ", t " + fmt("%.1e", tErr) + ", F " + fmt("%.1e", fErr);
  return o;
}

Outcome monotonicity() {
  Outcome o;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Matrix x = testsupport::randomMatrix(30 + seed % 25, 2 + seed % 4, 7000 + seed);
    const std::size_t k = 2 + seed % 4;

    // At least ~25 points per component: with fewer, a collapsing component
    // makes the jittered M-step inexact and the likelihood can dip.
    const Matrix xg = testsupport::randomMatrix(100 + seed % 200, 2 + seed % 4, 9000 + seed);
    GmmParams gp;
    gp.tolerance = 0.0;
    gp.maxIterations = 30;
    const GmmResult g = gmmFitModel(xg, k, seed, gp);
    for (std::size_t t = 1; t < g.logLikelihood.size(); ++t)
      o.require(g.logLikelihood[t] >= g.logLikelihood[t - 1] - 1e-8, "GMM log-likelihood decreased, seed " + std::to_string(seed));

    const FcmResult f = fcmFit(x, k, seed);
    for (std::size_t t = 1; t < f.objective.size(); ++t)
      o.require(f.objective[t] <= f.objective[t - 1] + 1e-8, "FCM objective increased, seed " + std::to_string(seed));

    const KMeansResult km = kmeansFit(x, k, seed);
    for (std::size_t t = 1; t < km.inertiaTrace.size(); ++t)
      o.require(km.inertiaTrace[t] <= km.inertiaTrace[t - 1] * (1.0 + 1e-12), "k-means inertia increased, seed " + std::to_string(seed));

    const Dendrogram dg = wardLinkage(x);
    for (std::size_t m = 1; m < dg.merges.size(); ++m)
      o.require(dg.merges[m].cost >= dg.merges[m - 1].cost, "Ward cost decreased, seed " + std::to_string(seed));
  }
  if (o.pass) o.detail = "100 instances each: GMM, FCM, k-means, Ward";
  return o;
}

Outcome normalization() {
  Outcome o;
  double rowErr = 0.0;
  double orthErr = 0.0;
  double eigLo = 0.0;
  double eigHi = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix x = testsupport::randomMatrix(60 + seed, 24, 300 + seed, 10.0);
    const FcmResult f = fcmFit(x, 5, seed);
    for (std::size_t i = 0; i < f.memberships.rows(); ++i) {
      double s = 0.0;
      for (double u : f.memberships.row(i)) s += u;
      rowErr = std::max(rowErr, std::abs(s - 1.0));
    }
    const PcaModel p = fitPca(x, 5);
    const Matrix g = multiplyTransposed(p.components, p.components);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) orthErr = std::max(orthErr, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
    const SymEigen e = symmetricEigen(normalizedLaplacian(rbfAffinity(x, 1.0 / (24.0 * 100.0))));
    eigLo = std::min(eigLo, *std::ranges::min_element(e.values));
    eigHi = std::max(eigHi, *std::ranges::max_element(e.values));
  }
  o.require(rowErr <= 1e-9, "FCM row sum error " + fmt("%.3g", rowErr));
  o.require(orthErr <= 1e-8, "PCA orthonormality error " + fmt("%.3g", orthErr));
  o.require(eigLo >= -1e-8 && eigHi <= 2.0 + 1e-8, "Laplacian eigenvalue outside [0, 2]");
  if (o.pass)
    o.detail = "row sum " + fmt("%.1e", rowErr) + ", orth " + fmt("%.1e", orthErr) + ", eig [" + fmt("%.2g", eigLo) + ", " +
               fmt("%.4g", eigHi) + "]";
  return o;
}

double correlation(const Matrix& a, std::size_t ca, const Matrix& b, std::size_t cb) {
  const double n = static_cast<double>(a.rows());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    ma += a(i, ca);
    mb += b(i, cb);
  }
  ma /= n;
  mb /= n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    sab += (a(i, ca) - ma) * (b(i, cb) - mb);
    saa += (a(i, ca) - ma) * (a(i, ca) - ma);
    sbb += (b(i, cb) - mb) * (b(i, cb) - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

Outcome icaRecovery() {
  Outcome o;
  Rng rng(2000);
  Matrix s(2000, 3);
  for (double& v : s.data()) v = std::sqrt(3.0) * (2.0 * rng.uniform() - 1.0);
  const Matrix x = s * testsupport::randomMatrix(3, 5, 2001);
  const auto t0 = Clock::now();
  const IcaModel m = fitIca(x, 3, 42);
  const Matrix y = m.transform(x);
  const double t = seconds(t0);
  std::array<std::size_t, 3> perm = {0, 1, 2};
  double best = 0.0;
  do {
    double worst = 1.0;
    for (std::size_t c = 0; c < 3; ++c) worst = std::min(worst, std::abs(correlation(y, c, s, perm[c])));
    best = std::max(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  o.require(best >= 0.95, "worst source correlation " + fmt("%.4f", best));
  o.require(t <= 5.0, "runtime " + fmt("%.2f s", t));
  if (o.pass) o.detail = "min |corr| " + fmt("%.4f", best) + " in " + fmt("%.3f s", t);
  return o;
}

bench::BenchConfig endToEndConfig(const fs::path& dir) {
  bench::BenchConfig c;
  c.patients = 10;
  c.seed = 42;
  c.outputDir = dir;
  c.methods.clear();
  for (MethodId id : kAllMethods)
    if (id != MethodId::AP && id != MethodId::MeanShift) c.methods.push_back(id);
  return c;
}

Outcome endToEnd(const fs::path& dir, std::string* runsCsv) {
  Outcome o;
  const bench::BenchConfig c = endToEndConfig(dir);
  bench::cmdGenerate(c);
  const auto t0 = Clock::now();
  const auto records = bench::cmdRun(c);
  const double wall = seconds(t0);
  *runsCsv = slurp(dir / bench::kRunsFile);

  std::map<MethodId, std::vector<double>> acc;
  double slowest = 0.0;
  for (const auto& r : records) {
    o.require(r.ok, std::string(methodName(r.method)) + " failed: " + r.error);
    if (!r.ok) continue;
    acc[r.method].push_back(r.report.accuracy);
    if (methodTakesK(r.method))
      o.require(r.kFoundRaw == 5, std::string(methodName(r.method)) + " found " + std::to_string(r.kFoundRaw) + " clusters");
    if (r.method == MethodId::GMM || r.method == MethodId::FCM || r.method == MethodId::MBK) {
      slowest = std::max(slowest, r.totalSeconds());
      o.require(r.totalSeconds() <= 5.0, std::string(methodName(r.method)) + " took " + fmt("%.2f s", r.totalSeconds()));
    }
  }
  const double gmm = median(acc[MethodId::GMM]);
  const double fcmAcc = median(acc[MethodId::FCM]);
  const double icaMbk = median(acc[MethodId::IcaMBK]);
  const double dbscan = median(acc[MethodId::DBSCAN]);
  o.require(gmm >= 0.80, "GMM median " + fmt("%.4f", gmm));
  o.require(fcmAcc >= 0.80, "FCM median " + fmt("%.4f", fcmAcc));
  o.require(icaMbk >= 0.80, "IcaMBK median " + fmt("%.4f", icaMbk));
  o.require(dbscan == 0.2, "DBSCAN median " + fmt("%.17g", dbscan));
  o.require(wall <= 60.0, "matrix wall time " + fmt("%.1f s", wall));
  if (o.pass)
    o.detail = "GMM " + fmt("%.3f", gmm) + ", FCM " + fmt("%.3f", fcmAcc) + ", IcaMBK " + fmt("%.3f", icaMbk) + ", DBSCAN " +
               fmt("%.3f", dbscan) + "; matrix " + fmt("%.1f s", wall) + ", slowest GMM/FCM/MBK fit " + fmt("%.2f s", slowest);
  return o;
}

Outcome canonicalStress() {
  Outcome o;
  std::mt19937_64 gen(179);
  for (int k : {1, 2, 7, 94, 179}) {
    for (std::size_t n : {std::size_t{500}, std::size_t{5000}}) {
      std::vector<int> raw(n);
      for (std::size_t i = 0; i < n; ++i) raw[i] = i < static_cast<std::size_t>(k) ? static_cast<int>(i) : std::uniform_int_distribution<int>(0, k - 1)(gen);
      std::shuffle(raw.begin(), raw.end(), gen);
      const ClusterAssignment a = makeAssignment(raw);
      o.require(a.kFound == k, "setup kFound " + std::to_string(a.kFound));
      const CanonicalClustering c = canonicalize(a);
      o.require(c.labels.size() == n, "n changed for k=" + std::to_string(k));
      o.require(c.sizes().size() == 5, "not five canonical ids");
      std::size_t total = 0;
      for (std::size_t v : c.sizes()) total += v;
      o.require(total == n, "sizes do not sum to n");
      for (int l : c.labels) o.require(l >= 0 && l < 5, "label out of range");
    }
  }
  if (o.pass) o.detail = "kFound 1, 2, 7, 94, 179 -> 5 clusters, n preserved";
  return o;
}

Outcome starBoundaries() {
  Outcome o;
  o.require(bonferroniStar(0.05 / 105.0, 105).level == Stars::One, "0.05/105");
  o.require(bonferroniStar(0.01 / 105.0, 105).level == Stars::Two, "0.01/105");
  o.require(bonferroniStar(0.001 / 105.0, 105).level == Stars::Three, "0.001/105");
  o.require(bonferroniStar(std::nextafter(0.05 / 105.0, 1.0), 105).level == Stars::None, "just above 0.05/105");
  if (o.pass) o.detail = "0.05/105 *, 0.01/105 **, 0.001/105 ***";
  return o;
}

Outcome determinism(const fs::path& dir, const std::string& firstRuns) {
  Outcome o;
  // Repeat of the end-to-end matrix in the same directory.
  const bench::BenchConfig c = endToEndConfig(dir);
  bench::cmdRun(c);
  o.require(!firstRuns.empty() && slurp(dir / bench::kRunsFile) == firstRuns, "end-to-end runs.csv differs between runs");

  // All 15 methods, including AP and mean shift, on smaller datasets.
  bench::BenchConfig all;
  all.patients = 2;
  all.curvesPerOrgan = 100;
  all.seed = 42;
  all.outputDir = dir / "all_methods";
  bench::cmdGenerate(all);
  bench::cmdRun(all);
  const std::string a = slurp(all.outputDir / bench::kRunsFile);
  bench::cmdRun(all);
  o.require(slurp(all.outputDir / bench::kRunsFile) == a, "15-method runs.csv differs between runs");
  if (o.pass) o.detail = "runs.csv byte-identical (13 methods x 10 patients; 15 methods x 2 patients)";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "tacclust_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  std::string runsCsv;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"single-cluster parity", singleClusterParity},
      {"frame schedule", frameSchedule},
      {"oracle equivalences", oracleEquivalences},
      {"monotonicity suites", monotonicity},
      {"normalization and orthogonality", normalization},
      {"ICA source recovery", icaRecovery},
      {"end-to-end synthetic benchmark", [&] { return endToEnd(work / "end_to_end", &runsCsv); }},
      {"canonicalization stress", canonicalStress},
      {"Bonferroni star boundaries", starBoundaries},
      {"determinism", [&] { return determinism(work / "end_to_end", runsCsv); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << ' ' << (i + 1) << ' ' << criteria[i].first << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << '/' << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
