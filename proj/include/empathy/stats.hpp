#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "empathy/features.hpp"
#include "empathy/types.hpp"

namespace empathy {

struct TTestResult {
  double t = 0.0;
  double p = 1.0;   // two-tailed
  double df = 0.0;
  double d = 0.0;   // (m1 - m2) / sqrt((s1^2 + s2^2) / 2)
  double m1 = 0.0;
  double m2 = 0.0;
  double s1 = 0.0;  // sample standard deviations (n - 1 denominator)
  double s2 = 0.0;
  bool infinite_t = false;  // zero variance with different means
};

/// Pooled-variance Student t-test with df = n1 + n2 - 2. Requires two
/// observations per sample.
TTestResult ttest_two_sample(std::span<const double> a, std::span<const double> b);

/// Two-tailed p-value of a t statistic.
double student_t_two_tailed(double t, double df);
/// Upper tail of the chi-square distribution.
double chi_square_sf(double x, double df);

struct McNemarResult {
  long b = 0;  // A correct, B wrong
  long c = 0;  // A wrong, B correct
  long n = 0;
  double chi2 = 0.0;
  double p = 1.0;
  double phi = 0.0;  // sqrt(chi2 / n)
};

/// Continuity-corrected McNemar test, max(0, |b - c| - 1)^2 / (b + c).
McNemarResult mcnemar_from_counts(long b, long c, long n);
McNemarResult mcnemar(std::span<const Label> preds_a, std::span<const Label> preds_b,
                      std::span<const Label> refs);

struct CorrelateRow {
  std::string feature;
  TTestResult test;
  bool significant = false;
  bool constant = false;  // no variation in either sample
};

/// Per-column t-test of `neutral` against `empathy`, sorted by |d| descending
/// (ties by column order). Columns must match.
std::vector<CorrelateRow> correlate_report(const FeatureTable& neutral, const FeatureTable& empathy,
                                           double alpha = 0.01);

void write_correlate_csv(const std::vector<CorrelateRow>& rows, std::ostream& out);
/// Aligned plain-text table of the first `limit` rows (all when 0).
std::string format_correlate_table(const std::vector<CorrelateRow>& rows, std::size_t limit = 0);

}  // namespace empathy
