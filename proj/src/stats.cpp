#include "empathy/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace empathy {

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // n - 1 denominator
};

Moments moments(std::span<const double> x) {
  Moments m;
  const double n = static_cast<double>(x.size());
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  m.var = x.size() > 1 ? ss / (n - 1.0) : 0.0;
  return m;
}

}  // namespace

double student_t_two_tailed(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

double chi_square_sf(double x, double df) {
  if (!(x > 0.0)) return 1.0;
  if (std::isinf(x)) return 0.0;
  const boost::math::chi_squared dist(df);
  return boost::math::cdf(boost::math::complement(dist, x));
}

TTestResult ttest_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw ValidationError("t-test needs at least two observations per sample");
  TTestResult r;
  const auto ma = moments(a), mb = moments(b);
  const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size());
  r.m1 = ma.mean;
  r.m2 = mb.mean;
  r.s1 = std::sqrt(ma.var);
  r.s2 = std::sqrt(mb.var);
  r.df = n1 + n2 - 2.0;
  const double diff = ma.mean - mb.mean;
  const double pooled = ((n1 - 1.0) * ma.var + (n2 - 1.0) * mb.var) / r.df;
  if (!(pooled > 0.0)) {
    if (diff == 0.0) return r;
    r.infinite_t = true;
    r.t = std::copysign(std::numeric_limits<double>::infinity(), diff);
    r.d = r.t;
    r.p = 0.0;
    return r;
  }
  r.t = diff / std::sqrt(pooled * (1.0 / n1 + 1.0 / n2));
  r.p = student_t_two_tailed(r.t, r.df);
  const double sp = std::sqrt((ma.var + mb.var) / 2.0);
  r.d = diff / sp;
  return r;
}

McNemarResult mcnemar_from_counts(long b, long c, long n) {
  McNemarResult r;
  r.b = b;
  r.c = c;
  r.n = n;
  if (b + c == 0) return r;
  const double corrected = std::max(0.0, std::abs(static_cast<double>(b - c)) - 1.0);
  r.chi2 = corrected * corrected / static_cast<double>(b + c);
  r.p = chi_square_sf(r.chi2, 1.0);
  r.phi = n > 0 ? std::sqrt(r.chi2 / static_cast<double>(n)) : 0.0;
  return r;
}

McNemarResult mcnemar(std::span<const Label> preds_a, std::span<const Label> preds_b,
                      std::span<const Label> refs) {
  if (preds_a.size() != refs.size() || preds_b.size() != refs.size())
    throw ValidationError("McNemar inputs must have equal length");
  long b = 0, c = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const bool ok_a = preds_a[i] == refs[i], ok_b = preds_b[i] == refs[i];
    b += ok_a && !ok_b;
    c += !ok_a && ok_b;
  }
  return mcnemar_from_counts(b, c, static_cast<long>(refs.size()));
}

std::vector<CorrelateRow> correlate_report(const FeatureTable& neutral, const FeatureTable& empathy,
                                           double alpha) {
  if (neutral.cols() != empathy.cols())
    throw ValidationError("correlate report needs matching feature columns");
  std::vector<CorrelateRow> rows(neutral.cols());
  std::vector<double> a(neutral.rows()), b(empathy.rows());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = neutral.X(static_cast<Eigen::Index>(i), jj);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = empathy.X(static_cast<Eigen::Index>(i), jj);
    rows[j].feature = neutral.schema->names[j];
    rows[j].test = ttest_two_sample(a, b);
    rows[j].constant = rows[j].test.s1 == 0.0 && rows[j].test.s2 == 0.0;
    rows[j].significant = rows[j].test.p < alpha;
  }
  std::stable_sort(rows.begin(), rows.end(), [](const CorrelateRow& x, const CorrelateRow& y) {
    return std::abs(x.test.d) > std::abs(y.test.d);
  });
  return rows;
}

void write_correlate_csv(const std::vector<CorrelateRow>& rows, std::ostream& out) {
  out << "feature,t,p,d,df,m1,m2,s1,s2,significant,constant\n";
  char buf[512];
  for (const auto& r : rows) {
    const auto& t = r.test;
    std::snprintf(buf, sizeof buf, ",%.10g,%.10g,%.10g,%g,%.10g,%.10g,%.10g,%.10g,%d,%d\n", t.t, t.p,
                  t.d, t.df, t.m1, t.m2, t.s1, t.s2, r.significant ? 1 : 0, r.constant ? 1 : 0);
    out << r.feature << buf;
  }
}

std::string format_correlate_table(const std::vector<CorrelateRow>& rows, std::size_t limit) {
  const std::size_t n = limit == 0 ? rows.size() : std::min(limit, rows.size());
  std::size_t width = 7;
  for (std::size_t i = 0; i < n; ++i) width = std::max(width, rows[i].feature.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %10s  %10s  %10s  %s\n", static_cast<int>(width), "feature",
                "d", "t", "p", "flags");
  out += buf;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rows[i];
    std::string flags;
    if (r.significant) flags += "*";
    if (r.constant) flags += "constant";
    std::snprintf(buf, sizeof buf, "%-*s  %10.4f  %10.4f  %10.3g  %s\n", static_cast<int>(width),
                  r.feature.c_str(), r.test.d, r.test.t, r.test.p, flags.c_str());
    out += buf;
  }
  return out;
}

}  // namespace empathy
