#pragma once

#include <array>
#include <span>
#include <string>

namespace arena::stats {

// Outcome of a hypothesis test. When `degenerate` is set the p-value follows
// the convention documented on the producing function rather than the
// asymptotic formula.
struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::string method;
  bool degenerate = false;
  std::string warning;
};

using Table2x2 = std::array<std::array<long long, 2>, 2>;

/// Two-sided Mann-Whitney U. The statistic is U for sample `a`
/// (average ranks on ties). The p-value uses the normal approximation with
/// tie-corrected variance and a 0.5 continuity correction. Samples with fewer
/// than three observations are flagged degenerate but still get the
/// approximate p-value; all-tied data is degenerate with p = 1.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

/// Pearson chi-squared on a 2x2 table, 1 df, no continuity correction.
/// Any zero row or column margin is degenerate with p = 1.
TestResult chi2_2x2(const Table2x2& table);

/// Paired t-test on a - b, two-sided, df = n - 1. Zero-variance differences
/// are degenerate: p = 0 when the mean difference is non-zero, else p = 1.
TestResult paired_t(std::span<const double> a, std::span<const double> b);

// Distribution helpers, exposed for tests.
double normal_sf(double z);
double chi2_sf_1df(double x);
double regularized_incomplete_beta(double a, double b, double x);
double student_t_two_sided(double t, double df);

}  // namespace arena::stats
