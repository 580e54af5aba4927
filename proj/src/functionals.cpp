#include "empathy/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "empathy/dsp.hpp"

namespace empathy {

namespace {
constexpr std::size_t kLpcOrder = 6;
}

const std::vector<std::string>& functional_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n = {
        "mean",        "rqmean",      "nnz_mean",      "stddev",        "skewness",
        "kurtosis",    "pct1",        "pct99",         "pct_range1_99", "quartile1",
        "quartile2",   "quartile3",   "iqr1_2",        "iqr2_3",        "iqr1_3",
        "maxpos_rel",  "minpos_rel",  "range",         "linreg_slope",  "linreg_offset",
        "linreg_err",  "qreg_a",      "qreg_b",        "qreg_c",        "qreg_err",
        "uplevel25",   "uplevel50",   "uplevel75",     "uplevel90",     "rise_time",
        "fall_time",   "seglen_mean", "seglen_max",    "seglen_min",    "seglen_std"};
    for (std::size_t i = 0; i < kLpcOrder; ++i) n.push_back("lpc" + std::to_string(i));
    n.push_back("lpc_gain");
    return n;
  }();
  return names;
}

double percentile(std::span<const double> sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

FunctionalResult compute_functionals(std::span<const double> track, double rate_fps) {
  FunctionalResult out;
  out.values.reserve(functional_names().size());
  auto push = [&](double v) { out.values.push_back(std::isfinite(v) ? v : 0.0); };
  const std::size_t n = track.size();
  if (n == 0) {
    out.values.assign(functional_names().size(), 0.0);
    out.degenerate = true;
    return out;
  }
  out.degenerate = n < 2;
  const double dn = static_cast<double>(n);

  const double mean = std::accumulate(track.begin(), track.end(), 0.0) / dn;
  double sq = 0.0, nnz_sum = 0.0;
  std::size_t nnz = 0;
  for (double v : track) {
    sq += v * v;
    if (v != 0.0) {
      nnz_sum += v;
      ++nnz;
    }
  }
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : track) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= dn;
  m3 /= dn;
  m4 /= dn;
  const double sd = std::sqrt(m2);
  const bool flat = out.degenerate || !(m2 > 1e-300);
  push(mean);
  push(std::sqrt(sq / dn));
  push(nnz ? nnz_sum / static_cast<double>(nnz) : 0.0);
  push(out.degenerate ? 0.0 : sd);
  push(flat ? 0.0 : m3 / (m2 * sd));
  push(flat ? 0.0 : m4 / (m2 * m2));

  std::vector<double> sorted(track.begin(), track.end());
  std::sort(sorted.begin(), sorted.end());
  const double p1 = percentile(sorted, 0.01), p99 = percentile(sorted, 0.99);
  const double q1 = percentile(sorted, 0.25), q2 = percentile(sorted, 0.50),
               q3 = percentile(sorted, 0.75);
  push(p1);
  push(p99);
  push(p99 - p1);
  push(q1);
  push(q2);
  push(q3);
  push(q2 - q1);
  push(q3 - q2);
  push(q3 - q1);

  const auto [mn_it, mx_it] = std::minmax_element(track.begin(), track.end());
  const double mn = *mn_it, mx = *mx_it;
  const double last = n > 1 ? dn - 1.0 : 1.0;
  push(n > 1 ? static_cast<double>(mx_it - track.begin()) / last : 0.0);
  push(n > 1 ? static_cast<double>(mn_it - track.begin()) / last : 0.0);
  push(mx - mn);

  // linear regression on frame index
  double slope = 0.0, offset = mean, lin_err = 0.0;
  if (n > 1) {
    const double t_mean = (dn - 1.0) / 2.0;
    double stt = 0.0, stv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dt = static_cast<double>(i) - t_mean;
      stt += dt * dt;
      stv += dt * (track[i] - mean);
    }
    slope = stv / stt;
    offset = mean - slope * t_mean;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double r = track[i] - (slope * static_cast<double>(i) + offset);
    lin_err += r * r;
  }
  push(slope);
  push(offset);
  push(lin_err / dn);

  // quadratic regression, solved on a [0,1] time axis for conditioning
  double qa = 0.0, qb = slope, qc = offset, q_err = lin_err / dn;
  if (n > 2) {
    Eigen::MatrixXd design(static_cast<Eigen::Index>(n), 3);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
    const double scale = dn - 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = static_cast<double>(i) / scale;
      design(static_cast<Eigen::Index>(i), 0) = u * u;
      design(static_cast<Eigen::Index>(i), 1) = u;
      design(static_cast<Eigen::Index>(i), 2) = 1.0;
      rhs(static_cast<Eigen::Index>(i)) = track[i];
    }
    const Eigen::Vector3d coef = design.colPivHouseholderQr().solve(rhs);
    qa = coef(0) / (scale * scale);
    qb = coef(1) / scale;
    qc = coef(2);
    q_err = (design * coef - rhs).squaredNorm() / dn;
  }
  push(qa);
  push(qb);
  push(qc);
  push(q_err);

  const double range = mx - mn;
  for (double level : {0.25, 0.50, 0.75, 0.90}) {
    if (!(range > 0.0)) {
      push(0.0);
      continue;
    }
    const double threshold = mn + level * range;
    const auto above = std::count_if(track.begin(), track.end(), [&](double v) { return v > threshold; });
    push(static_cast<double>(above) / dn);
  }

  long rises = 0, falls = 0;
  for (std::size_t i = 1; i < n; ++i) {
    rises += track[i] > track[i - 1];
    falls += track[i] < track[i - 1];
  }
  push(static_cast<double>(rises) / dn);
  push(static_cast<double>(falls) / dn);

  std::vector<double> runs;
  for (std::size_t i = 0; i < n;) {
    if (track[i] == 0.0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && track[j] != 0.0) ++j;
    runs.push_back(static_cast<double>(j - i) / rate_fps);
    i = j;
  }
  if (runs.empty()) {
    for (int k = 0; k < 4; ++k) push(0.0);
  } else {
    const double rn = static_cast<double>(runs.size());
    const double rmean = std::accumulate(runs.begin(), runs.end(), 0.0) / rn;
    double rvar = 0.0;
    for (double r : runs) rvar += (r - rmean) * (r - rmean);
    push(rmean);
    push(*std::max_element(runs.begin(), runs.end()));
    push(*std::min_element(runs.begin(), runs.end()));
    push(std::sqrt(rvar / rn));
  }

  // LPC of the mean-removed contour
  std::vector<double> r(kLpcOrder + 1, 0.0);
  for (std::size_t lag = 0; lag <= kLpcOrder && lag < n; ++lag)
    for (std::size_t i = lag; i < n; ++i) r[lag] += (track[i] - mean) * (track[i - lag] - mean);
  double gain = 0.0;
  const auto lpc = dsp::levinson_durbin(r, kLpcOrder, gain);
  for (double c : lpc) push(c);
  push(gain / dn);
  return out;
}

}  // namespace empathy
