#include "arena/stats.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace arena::stats {
namespace {

double clamp_p(double p) { return std::clamp(p, 0.0, 1.0); }

// Lentz continued fraction for the incomplete beta function.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double chi2_sf_1df(double x) {
  if (x <= 0.0) return 1.0;
  return std::erfc(std::sqrt(x / 2.0));
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  const double x = df / (df + t * t);
  return clamp_p(regularized_incomplete_beta(df / 2.0, 0.5, x));
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("mann_whitney_u: both samples must be non-empty");
  }
  const std::size_t n1 = a.size();
  const std::size_t n2 = b.size();
  const std::size_t n = n1 + n2;

  struct Obs {
    double value;
    bool from_a;
  };
  std::vector<Obs> pooled;
  pooled.reserve(n);
  for (double v : a) pooled.push_back({v, true});
  for (double v : b) pooled.push_back({v, false});
  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const Obs& l, const Obs& r) { return l.value < r.value; });

  double rank_sum_a = 0.0;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && pooled[j].value == pooled[i].value) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].from_a) rank_sum_a += avg_rank;
    }
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }

  const double dn1 = static_cast<double>(n1);
  const double dn2 = static_cast<double>(n2);
  const double dn = static_cast<double>(n);
  TestResult result;
  result.method = "mann-whitney-u";
  result.statistic = rank_sum_a - dn1 * (dn1 + 1.0) / 2.0;

  const double mean = dn1 * dn2 / 2.0;
  double variance = dn1 * dn2 / 12.0 * (dn + 1.0);
  if (n > 1) variance -= dn1 * dn2 / 12.0 * tie_term / (dn * (dn - 1.0));
  if (variance <= 0.0) {
    result.degenerate = true;
    result.p_value = 1.0;
    result.warning = "all observations tied";
    return result;
  }
  const double z = (std::fabs(result.statistic - mean) - 0.5) / std::sqrt(variance);
  result.p_value = z <= 0.0 ? 1.0 : clamp_p(2.0 * normal_sf(z));
  if (n1 < 3 || n2 < 3) {
    result.degenerate = true;
    result.warning = "small sample: normal approximation is unreliable";
  }
  return result;
}

TestResult chi2_2x2(const Table2x2& table) {
  for (const auto& row : table) {
    for (long long cell : row) {
      if (cell < 0) throw std::invalid_argument("chi2_2x2: negative count");
    }
  }
  const double a = static_cast<double>(table[0][0]);
  const double b = static_cast<double>(table[0][1]);
  const double c = static_cast<double>(table[1][0]);
  const double d = static_cast<double>(table[1][1]);
  const double total = a + b + c + d;
  if (total <= 0.0) throw std::invalid_argument("chi2_2x2: empty table");

  TestResult result;
  result.method = "chi2-2x2";
  const double r1 = a + b;
  const double r2 = c + d;
  const double c1 = a + c;
  const double c2 = b + d;
  if (r1 == 0.0 || r2 == 0.0 || c1 == 0.0 || c2 == 0.0) {
    result.degenerate = true;
    result.p_value = 1.0;
    result.warning = "zero margin";
    return result;
  }
  const double cross = a * d - b * c;
  result.statistic = total * cross * cross / (r1 * r2 * c1 * c2);
  result.p_value = clamp_p(chi2_sf_1df(result.statistic));
  return result;
}

TestResult paired_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_t: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("paired_t: need at least two pairs");
  const std::size_t n = a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
  const double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  const double variance = ss / static_cast<double>(n - 1);

  TestResult result;
  result.method = "paired-t";
  if (variance <= 1e-300) {
    result.degenerate = true;
    if (mean == 0.0) {
      result.statistic = 0.0;
      result.p_value = 1.0;
    } else {
      result.statistic = mean > 0 ? INFINITY : -INFINITY;
      result.p_value = 0.0;
    }
    result.warning = "zero variance in differences";
    return result;
  }
  result.statistic = mean / std::sqrt(variance / static_cast<double>(n));
  result.p_value = student_t_two_sided(result.statistic, static_cast<double>(n - 1));
  return result;
}

}  // namespace arena::stats
