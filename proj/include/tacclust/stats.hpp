#pragma once

// Wilcoxon signed-rank, two-sample t, and variance-ratio F tests, with
// Bonferroni star levels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string_view>
#include <vector>

#include "tacclust/error.hpp"

namespace tacclust {

enum class Direction { FirstHigher, SecondHigher, None };
enum class TestMethod { Wilcoxon, TTest, FTest };

inline std::string_view directionName(Direction d) {
  switch (d) {
    case Direction::FirstHigher: return "first-higher";
    case Direction::SecondHigher: return "second-higher";
    case Direction::None: return "none";
  }
  return "none";
}

inline std::string_view testMethodName(TestMethod m) {
  switch (m) {
    case TestMethod::Wilcoxon: return "wilcoxon";
    case TestMethod::TTest: return "ttest";
    case TestMethod::FTest: return "ftest";
  }
  return "";
}

struct TestResult {
  double statistic = 0.0;
  double pValue = 1.0;
  Direction direction = Direction::None;
  TestMethod method = TestMethod::Wilcoxon;
};

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double betaContinuedFraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw Error("regularizedIncompleteBeta: continued fraction did not converge");
}

}  // namespace detail

/// I_x(a, b).
inline double regularizedIncompleteBeta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error("regularizedIncompleteBeta: a and b must be > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw Error("regularizedIncompleteBeta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double logFront = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(logFront);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betaContinuedFraction(a, b, x) / a;
  return 1.0 - front * detail::betaContinuedFraction(b, a, 1.0 - x) / b;
}

/// Two-sided tail probability P(|T| >= |t|) of Student's t with df degrees of freedom.
inline double studentTwoSided(double t, double df) {
  if (std::isinf(t)) return 0.0;
  return std::min(1.0, regularizedIncompleteBeta(df / 2.0, 0.5, df / (df + t * t)));
}

/// P(F <= f) for the F distribution with (d1, d2) degrees of freedom.
inline double fisherCdf(double f, double d1, double d2) {
  if (f <= 0.0) return 0.0;
  if (std::isinf(f)) return 1.0;
  return regularizedIncompleteBeta(d1 / 2.0, d2 / 2.0, d1 * f / (d1 * f + d2));
}

namespace detail {

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sampleVariance(const std::vector<double>& v, double m) {
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

// Midranks (1-based) of the values.
inline std::vector<double> midranks(const std::vector<double>& v, std::vector<std::size_t>* tieSizes = nullptr) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t l, std::size_t r) { return v[l] < v[r]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    if (tieSizes != nullptr) tieSizes->push_back(j - i + 1);
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

/// Largest effective sample size for which the Wilcoxon p-value is exact.
inline constexpr std::size_t kWilcoxonExactLimit = 12;

/// Exact two-sided p: the share of the 2^n sign assignments of `ranks` whose
/// min(W+, W−) is at most w. Ranks must be multiples of 1/2.
inline double wilcoxonExactP(const std::vector<double>& ranks, double w) {
  std::vector<long> doubled(ranks.size());
  long total = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    doubled[i] = std::lround(2.0 * ranks[i]);
    total += doubled[i];
  }
  // ways[s]: number of sign assignments with 2·W+ == s.
  std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
  ways[0] = 1.0;
  for (long r : doubled)
    for (long s = total; s >= r; --s) ways[static_cast<std::size_t>(s)] += ways[static_cast<std::size_t>(s - r)];
  const long w2 = std::lround(2.0 * w);
  double hit = 0.0;
  for (long s = 0; s <= total; ++s)
    if (std::min(s, total - s) <= w2) hit += ways[static_cast<std::size_t>(s)];
  return std::min(1.0, hit / std::ldexp(1.0, static_cast<int>(ranks.size())));
}

/// Paired test on d = x − y. Zero differences are dropped; |d| get midranks;
/// the statistic is min(W+, W−). Exact for at most `exactLimit` nonzero
/// differences, otherwise a normal approximation with tie-corrected variance
/// and a 0.5 continuity correction. Direction follows the sign of W+ − W−.
inline TestResult wilcoxonSignedRank(const std::vector<double>& x, const std::vector<double>& y,
                                     std::size_t exactLimit = kWilcoxonExactLimit) {
  if (x.size() != y.size()) throw Error("wilcoxonSignedRank: samples differ in length");
  if (x.empty()) throw Error("wilcoxonSignedRank: empty samples");
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] - y[i] != 0.0) d.push_back(x[i] - y[i]);

  TestResult r;
  r.method = TestMethod::Wilcoxon;
  if (d.empty()) return r;

  std::vector<double> absd(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) absd[i] = std::abs(d[i]);
  std::vector<std::size_t> ties;
  const auto ranks = detail::midranks(absd, &ties);
  double wPlus = 0.0;
  double wMinus = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) (d[i] > 0.0 ? wPlus : wMinus) += ranks[i];
  const double w = std::min(wPlus, wMinus);
  r.statistic = w;
  r.direction = wPlus > wMinus ? Direction::FirstHigher : wPlus < wMinus ? Direction::SecondHigher : Direction::None;

  const auto n = static_cast<double>(d.size());
  if (d.size() <= exactLimit) {
    r.pValue = wilcoxonExactP(ranks, w);
    return r;
  }
  const double mn = n * (n + 1.0) / 4.0;
  double var = n * (n + 1.0) * (2.0 * n + 1.0);
  for (std::size_t t : ties) {
    const auto tt = static_cast<double>(t);
    var -= 0.5 * (tt * tt * tt - tt);
  }
  const double se = std::sqrt(var / 24.0);
  const double diff = w - mn;
  const double correction = diff > 0.0 ? 0.5 : diff < 0.0 ? -0.5 : 0.0;
  const double z = (diff - correction) / se;
  r.pValue = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
  return r;
}

enum class TTestVariant { Welch, Pooled };

/// Two-sided two-sample t-test; Welch–Satterthwaite degrees of freedom by default.
inline TestResult twoSampleTTest(const std::vector<double>& x, const std::vector<double>& y,
                                 TTestVariant variant = TTestVariant::Welch) {
  if (x.size() < 2 || y.size() < 2) throw Error("twoSampleTTest: each sample needs at least 2 values");
  const double n1 = static_cast<double>(x.size());
  const double n2 = static_cast<double>(y.size());
  const double m1 = detail::mean(x);
  const double m2 = detail::mean(y);
  const double v1 = detail::sampleVariance(x, m1);
  const double v2 = detail::sampleVariance(y, m2);

  TestResult r;
  r.method = TestMethod::TTest;
  r.direction = m1 > m2 ? Direction::FirstHigher : m1 < m2 ? Direction::SecondHigher : Direction::None;
  double se2 = 0.0;
  double df = 0.0;
  if (variant == TTestVariant::Welch) {
    const double a = v1 / n1;
    const double b = v2 / n2;
    se2 = a + b;
    df = se2 * se2 / (a * a / (n1 - 1.0) + b * b / (n2 - 1.0));
  } else {
    df = n1 + n2 - 2.0;
    se2 = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / df * (1.0 / n1 + 1.0 / n2);
  }
  if (se2 == 0.0) {
    r.statistic = m1 == m2 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), m1 - m2);
    r.pValue = m1 == m2 ? 1.0 : 0.0;
    return r;
  }
  r.statistic = (m1 - m2) / std::sqrt(se2);
  r.pValue = studentTwoSided(r.statistic, df);
  return r;
}

/// F = s1² / s2² with a two-sided p of 2·min(P(F ≤ f), P(F ≥ f)).
inline TestResult fTestVarianceEquality(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2 || y.size() < 2) throw Error("fTestVarianceEquality: each sample needs at least 2 values");
  const double v1 = detail::sampleVariance(x, detail::mean(x));
  const double v2 = detail::sampleVariance(y, detail::mean(y));
  TestResult r;
  r.method = TestMethod::FTest;
  r.direction = v1 > v2 ? Direction::FirstHigher : v1 < v2 ? Direction::SecondHigher : Direction::None;
  if (v1 == v2) {
    r.statistic = 1.0;
    r.pValue = 1.0;
    return r;
  }
  if (v1 == 0.0 || v2 == 0.0) {
    r.statistic = v2 == 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    r.pValue = 0.0;
    return r;
  }
  r.statistic = v1 / v2;
  const double cdf = fisherCdf(r.statistic, static_cast<double>(x.size() - 1), static_cast<double>(y.size() - 1));
  r.pValue = std::min(1.0, 2.0 * std::min(cdf, 1.0 - cdf));
  return r;
}

enum class Stars { None, One, Two, Three };

struct StarLevel {
  Stars level = Stars::None;
  std::size_t m = 1;
  double alpha = 0.05;
};

/// Thresholds 0.05/m, 0.01/m and 0.001/m, inclusive.
inline StarLevel bonferroniStar(double p, std::size_t m) {
  if (m < 1) throw Error("bonferroniStar: m must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw Error("bonferroniStar: p must lie in [0, 1]");
  const auto md = static_cast<double>(m);
  StarLevel s;
  s.m = m;
  if (p <= 0.001 / md)
    s.level = Stars::Three;
  else if (p <= 0.01 / md)
    s.level = Stars::Two;
  else if (p <= 0.05 / md)
    s.level = Stars::One;
  return s;
}

inline std::string_view starString(Stars s) {
  switch (s) {
    case Stars::None: return "";
    case Stars::One: return "*";
    case Stars::Two: return "**";
    case Stars::Three: return "***";
  }
  return "";
}

}  // namespace tacclust
