#include "empathy/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <fftw3.h>

namespace empathy::dsp {

std::vector<double> preemphasize(std::span<const double> signal, double k) {
  if (k < 0.0 || k >= 1.0) throw std::invalid_argument("pre-emphasis k must be in [0, 1)");
  std::vector<double> y(signal.size());
  if (signal.empty()) return y;
  y[0] = signal[0];
  for (std::size_t n = 1; n < signal.size(); ++n) y[n] = signal[n] - k * signal[n - 1];
  return y;
}

std::vector<double> hamming_window(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                  static_cast<double>(n - 1));
  return w;
}

std::vector<double> gaussian_window(std::size_t n, double sigma) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  const double half = static_cast<double>(n - 1) / 2.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (static_cast<double>(i) - half) / (sigma * half);
    w[i] = std::exp(-0.5 * x * x);
  }
  return w;
}

namespace {
// FFTW's planner is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct RealFft::Impl {
  double* in = nullptr;
  fftw_complex* spec = nullptr;
  double* out = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

RealFft::RealFft(std::size_t size) : size_(size), impl_(std::make_unique<Impl>()) {
  if (size < 2) throw std::invalid_argument("FFT size must be >= 2");
  std::lock_guard lock(planner_mutex());
  const int n = static_cast<int>(size);
  impl_->in = fftw_alloc_real(size);
  impl_->out = fftw_alloc_real(size);
  impl_->spec = fftw_alloc_complex(size / 2 + 1);
  impl_->forward = fftw_plan_dft_r2c_1d(n, impl_->in, impl_->spec, FFTW_ESTIMATE);
  impl_->inverse = fftw_plan_dft_c2r_1d(n, impl_->spec, impl_->out, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(impl_->forward);
  fftw_destroy_plan(impl_->inverse);
  fftw_free(impl_->in);
  fftw_free(impl_->out);
  fftw_free(impl_->spec);
}

void RealFft::power(std::span<const double> frame, std::span<double> out) {
  const std::size_t n = std::min(frame.size(), size_);
  std::copy_n(frame.begin(), n, impl_->in);
  std::fill(impl_->in + n, impl_->in + size_, 0.0);
  fftw_execute(impl_->forward);
  for (std::size_t k = 0; k < bins() && k < out.size(); ++k)
    out[k] = impl_->spec[k][0] * impl_->spec[k][0] + impl_->spec[k][1] * impl_->spec[k][1];
}

void RealFft::autocorrelation(std::span<const double> frame, std::span<double> out) {
  const std::size_t n = std::min(frame.size(), size_);
  std::copy_n(frame.begin(), n, impl_->in);
  std::fill(impl_->in + n, impl_->in + size_, 0.0);
  fftw_execute(impl_->forward);
  for (std::size_t k = 0; k < bins(); ++k) {
    impl_->spec[k][0] = impl_->spec[k][0] * impl_->spec[k][0] + impl_->spec[k][1] * impl_->spec[k][1];
    impl_->spec[k][1] = 0.0;
  }
  fftw_execute(impl_->inverse);
  const double scale = 1.0 / static_cast<double>(size_);
  for (std::size_t k = 0; k < bins() && k < out.size(); ++k) out[k] = impl_->out[k] * scale;
}

double band_energy(std::span<const double> power, double sample_rate, std::size_t fft_size,
                   double lo_hz, double hi_hz) {
  const double df = sample_rate / static_cast<double>(fft_size);
  double sum = 0.0;
  for (std::size_t k = 0; k < power.size(); ++k) {
    const double f = static_cast<double>(k) * df;
    if (f + df / 2.0 > lo_hz && f - df / 2.0 < hi_hz) sum += power[k];
  }
  return sum;
}

SpectralLlds spectral_llds(std::span<const double> power, std::span<const double> previous,
                           double sample_rate, std::size_t fft_size) {
  SpectralLlds out;
  const std::size_t n = power.size();
  const double total = std::accumulate(power.begin(), power.end(), 0.0);
  auto freq = [&](std::size_t k) { return bin_frequency(k, fft_size, sample_rate); };

  out.energy_0_650 = band_energy(power, sample_rate, fft_size, 0.0, 650.0);
  out.energy_250_650 = band_energy(power, sample_rate, fft_size, 250.0, 650.0);
  out.energy_1k_4k = band_energy(power, sample_rate, fft_size, 1000.0, 4000.0);

  double prev_total = 0.0;
  for (double v : previous) prev_total += v;
  if (!previous.empty() && previous.size() == n && (total > 0.0 || prev_total > 0.0)) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double a = total > 0.0 ? std::sqrt(power[k] / total) : 0.0;
      const double b = prev_total > 0.0 ? std::sqrt(previous[k] / prev_total) : 0.0;
      acc += (a - b) * (a - b);
    }
    out.flux = std::sqrt(acc);
  }

  if (!(total > 0.0)) {
    out.silent = true;
    return out;
  }

  double centroid = 0.0;
  for (std::size_t k = 0; k < n; ++k) centroid += freq(k) * power[k];
  centroid /= total;
  out.centroid_hz = centroid;

  const double qs[4] = {0.25, 0.50, 0.75, 0.90};
  double* targets[4] = {&out.rolloff25, &out.rolloff50, &out.rolloff75, &out.rolloff90};
  double cum = 0.0;
  int q = 0;
  for (std::size_t k = 0; k < n && q < 4; ++k) {
    cum += power[k];
    while (q < 4 && cum >= qs[q] * total) *targets[q++] = freq(k);
  }
  while (q < 4) *targets[q++] = freq(n - 1);

  double m2 = 0.0, m3 = 0.0, m4 = 0.0, entropy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double p = power[k] / total;
    const double d = freq(k) - centroid;
    m2 += d * d * p;
    m3 += d * d * d * p;
    m4 += d * d * d * d * p;
    if (p > 0.0) entropy -= p * std::log2(p);
  }
  out.variance = m2;
  out.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  out.kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
  out.entropy = entropy;

  // least-squares slope of the normalised spectrum against frequency in kHz
  double sf = 0.0, sp = 0.0, sff = 0.0, sfp = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double f = freq(k) / 1000.0;
    const double p = power[k] / total;
    sf += f;
    sp += p;
    sff += f * f;
    sfp += f * p;
  }
  const double dn = static_cast<double>(n);
  const double denom = dn * sff - sf * sf;
  out.slope = denom > 0.0 ? (dn * sfp - sf * sp) / denom : 0.0;

  const auto [mn, mx] = std::minmax_element(power.begin(), power.end());
  out.pos_max_hz = freq(static_cast<std::size_t>(mx - power.begin()));
  out.pos_min_hz = freq(static_cast<std::size_t>(mn - power.begin()));
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(std::size_t n_filters, std::size_t fft_size, double sample_rate,
                             double max_hz, FilterShape shape) {
  if (n_filters == 0) throw std::invalid_argument("filterbank needs at least one filter");
  const std::size_t n_bins = fft_size / 2 + 1;
  const double max_mel = hz_to_mel(max_hz);
  auto freq = [&](std::size_t k) { return bin_frequency(k, fft_size, sample_rate); };
  weights_.resize(n_filters);

  if (shape == FilterShape::Rectangular) {
    std::vector<double> edges(n_filters + 1);
    for (std::size_t i = 0; i <= n_filters; ++i)
      edges[i] = mel_to_hz(max_mel * static_cast<double>(i) / static_cast<double>(n_filters));
    std::vector<std::vector<double>> dense(n_filters, std::vector<double>(n_bins, 0.0));
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = freq(k);
      std::size_t m = 0;
      while (m + 1 < n_filters && f >= edges[m + 1]) ++m;
      dense[m][k] = 1.0;
    }
    for (std::size_t m = 0; m < n_filters; ++m) {
      auto first = std::find_if(dense[m].begin(), dense[m].end(), [](double v) { return v > 0; });
      auto last = std::find_if(dense[m].rbegin(), dense[m].rend(), [](double v) { return v > 0; });
      if (first == dense[m].end()) continue;
      weights_[m].first = static_cast<std::size_t>(first - dense[m].begin());
      weights_[m].w.assign(first, last.base());
    }
    return;
  }

  std::vector<double> points(n_filters + 2);
  for (std::size_t i = 0; i < points.size(); ++i)
    points[i] = mel_to_hz(max_mel * static_cast<double>(i) / static_cast<double>(n_filters + 1));
  for (std::size_t m = 0; m < n_filters; ++m) {
    const double lo = points[m], centre = points[m + 1], hi = points[m + 2];
    std::vector<double> w(n_bins, 0.0);
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = freq(k);
      if (f > lo && f <= centre)
        w[k] = (f - lo) / (centre - lo);
      else if (f > centre && f < hi)
        w[k] = (hi - f) / (hi - centre);
    }
    auto first = std::find_if(w.begin(), w.end(), [](double v) { return v > 0; });
    auto last = std::find_if(w.rbegin(), w.rend(), [](double v) { return v > 0; });
    if (first == w.end()) continue;
    weights_[m].first = static_cast<std::size_t>(first - w.begin());
    weights_[m].w.assign(first, last.base());
  }
}

void MelFilterbank::apply(std::span<const double> power, std::span<double> out) const {
  for (std::size_t m = 0; m < weights_.size(); ++m) {
    const auto& f = weights_[m];
    double sum = 0.0;
    for (std::size_t i = 0; i < f.w.size() && f.first + i < power.size(); ++i)
      sum += f.w[i] * power[f.first + i];
    out[m] = sum;
  }
}

std::vector<double> mfcc_from_bands(std::span<const double> bands, std::size_t n_coeffs) {
  const std::size_t m = bands.size();
  std::vector<double> logs(m);
  for (std::size_t i = 0; i < m; ++i) logs[i] = std::log(std::max(bands[i], 1e-10));
  std::vector<double> c(n_coeffs, 0.0);
  const double scale = std::sqrt(2.0 / static_cast<double>(m));
  for (std::size_t n = 1; n <= n_coeffs; ++n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      sum += logs[i] * std::cos(std::numbers::pi * static_cast<double>(n) *
                                (static_cast<double>(i) + 0.5) / static_cast<double>(m));
    c[n - 1] = scale * sum;
  }
  return c;
}

double loudness(std::span<const double> bands) {
  double sum = 0.0;
  for (double b : bands) sum += std::pow(std::max(b, 0.0), 0.3);
  return sum;
}

double zero_crossing_rate(std::span<const double> frame) {
  if (frame.size() < 2) return 0.0;
  long crossings = 0;
  for (std::size_t i = 1; i < frame.size(); ++i)
    crossings += (frame[i] >= 0.0) != (frame[i - 1] >= 0.0);
  return static_cast<double>(crossings) / static_cast<double>(frame.size());
}

double rms_energy(std::span<const double> frame) {
  if (frame.empty()) return 0.0;
  double sum = 0.0;
  for (double v : frame) sum += v * v;
  return std::sqrt(sum / static_cast<double>(frame.size()));
}

namespace {
std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}
}  // namespace

PitchTracker::PitchTracker(std::size_t window_samples, double sample_rate, double sigma,
                           double min_f0, double max_f0, double voicing_threshold)
    : window_(gaussian_window(window_samples, sigma)),
      sample_rate_(sample_rate),
      min_f0_(min_f0),
      max_f0_(max_f0),
      threshold_(voicing_threshold),
      fft_(next_pow2(2 * window_samples)),
      buffer_(window_samples),
      acf_(fft_.bins()) {
  if (static_cast<double>(window_samples) < 2.0 * sample_rate / min_f0)
    throw std::invalid_argument("pitch window must hold two periods of the minimum F0");
  window_acf_.resize(fft_.bins());
  fft_.autocorrelation(window_, window_acf_);
  const double r0 = window_acf_[0];
  for (double& v : window_acf_) v /= r0;
}

PitchEstimate PitchTracker::estimate(std::span<const double> frame) {
  PitchEstimate est;
  last_peak_ = 0.0;
  const std::size_t n = window_.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n && i < frame.size(); ++i) mean += frame[i];
  mean /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    buffer_[i] = ((i < frame.size() ? frame[i] : 0.0) - mean) * window_[i];
  fft_.autocorrelation(buffer_, acf_);
  const double r0 = acf_[0];
  if (!(r0 > 1e-20)) return est;

  const auto lag_min = static_cast<std::size_t>(std::floor(sample_rate_ / max_f0_));
  const auto lag_max = std::min(static_cast<std::size_t>(std::ceil(sample_rate_ / min_f0_)),
                                acf_.size() - 2);
  auto r = [&](std::size_t lag) { return acf_[lag] / r0 / window_acf_[lag]; };

  double best_strength = -1e300;
  std::size_t best_lag = 0;
  for (std::size_t lag = std::max<std::size_t>(lag_min, 1); lag <= lag_max; ++lag) {
    const double v = r(lag);
    if (v <= 0.0 || v < r(lag - 1) || v < r(lag + 1)) continue;
    // small preference for shorter lags avoids octave-down errors
    const double strength =
        v - 0.01 * std::log2(min_f0_ * static_cast<double>(lag) / sample_rate_);
    if (strength > best_strength) {
      best_strength = strength;
      best_lag = lag;
    }
  }
  if (best_lag == 0) return est;

  const double a = r(best_lag - 1), b = r(best_lag), c = r(best_lag + 1);
  const double denom = a - 2.0 * b + c;
  double delta = 0.0;
  double peak = b;
  if (denom < 0.0) {
    delta = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
    peak = b - 0.25 * (a - c) * delta;
  }
  const double prob = std::clamp(peak, 0.0, 1.0);
  last_peak_ = prob;
  est.voicing_prob = prob;
  est.lag_samples = static_cast<double>(best_lag) + delta;
  if (prob >= threshold_) est.f0_hz = sample_rate_ / est.lag_samples;
  return est;
}

PeriodData find_periods(std::span<const double> frame, double period_samples, double sample_rate) {
  PeriodData out;
  if (!(period_samples >= 2.0) || frame.size() < 3) return out;
  const auto n = static_cast<long>(frame.size());
  const auto period = static_cast<long>(std::lround(period_samples));

  auto argmax = [&](long lo, long hi) {
    lo = std::max(lo, 1L);
    hi = std::min(hi, n - 2);
    long best = -1;
    for (long i = lo; i <= hi; ++i)
      if (best < 0 || frame[static_cast<std::size_t>(i)] > frame[static_cast<std::size_t>(best)])
        best = i;
    return best;
  };
  auto refine = [&](long i) {
    const double a = frame[static_cast<std::size_t>(i - 1)];
    const double b = frame[static_cast<std::size_t>(i)];
    const double c = frame[static_cast<std::size_t>(i + 1)];
    const double denom = a - 2.0 * b + c;
    return denom < 0.0 ? static_cast<double>(i) + std::clamp(0.5 * (a - c) / denom, -0.5, 0.5)
                       : static_cast<double>(i);
  };

  std::vector<long> marks;
  long mark = argmax(0, period - 1);
  const long slack = std::max(1L, static_cast<long>(std::lround(0.2 * period_samples)));
  while (mark >= 0) {
    marks.push_back(mark);
    const long lo = mark + period - slack;
    const long hi = mark + period + slack;
    if (hi > n - 2) break;
    mark = argmax(lo, hi);
  }
  if (marks.size() < 2) return out;
  for (std::size_t i = 1; i < marks.size(); ++i) {
    out.periods_s.push_back((refine(marks[i]) - refine(marks[i - 1])) / sample_rate);
    const auto begin = frame.begin() + marks[i - 1];
    const auto end = frame.begin() + marks[i];
    const auto [mn, mx] = std::minmax_element(begin, end);
    out.amplitudes.push_back(*mx - *mn);
  }
  return out;
}

double hnr_db(double acf_peak) {
  if (acf_peak <= 0.0) return kMinHnrDb;
  if (acf_peak >= 1.0) return kMaxHnrDb;
  return std::clamp(10.0 * std::log10(acf_peak / (1.0 - acf_peak)), kMinHnrDb, kMaxHnrDb);
}

VoiceQuality voice_quality(std::span<const double> periods_s, std::span<const double> amplitudes,
                           double acf_peak) {
  VoiceQuality vq;
  const std::size_t n = periods_s.size();
  if (n < 2) return vq;
  vq.unvoiced = false;
  const double mean_t =
      std::accumulate(periods_s.begin(), periods_s.end(), 0.0) / static_cast<double>(n);
  if (mean_t > 0.0) {
    double d1 = 0.0;
    for (std::size_t i = 1; i < n; ++i) d1 += std::abs(periods_s[i] - periods_s[i - 1]);
    vq.jitter_local = d1 / static_cast<double>(n - 1) / mean_t;
    if (n >= 3) {
      double d2 = 0.0;
      for (std::size_t i = 1; i + 1 < n; ++i)
        d2 += std::abs((periods_s[i + 1] - periods_s[i]) - (periods_s[i] - periods_s[i - 1]));
      vq.jitter_ddp = d2 / static_cast<double>(n - 2) / mean_t;
    }
  }
  const std::size_t na = amplitudes.size();
  if (na >= 2) {
    const double mean_a =
        std::accumulate(amplitudes.begin(), amplitudes.end(), 0.0) / static_cast<double>(na);
    if (mean_a > 0.0) {
      double d = 0.0;
      for (std::size_t i = 1; i < na; ++i) d += std::abs(amplitudes[i] - amplitudes[i - 1]);
      vq.shimmer_local = d / static_cast<double>(na - 1) / mean_a;
    }
  }
  vq.log_hnr = hnr_db(acf_peak);
  return vq;
}

std::vector<double> levinson_durbin(std::span<const double> r, std::size_t order, double& gain) {
  std::vector<double> a(order, 0.0);
  gain = 0.0;
  if (r.size() <= order || !(r[0] > 0.0)) return a;
  std::vector<double> prev(order, 0.0);
  double err = r[0];
  for (std::size_t i = 0; i < order; ++i) {
    double acc = r[i + 1];
    for (std::size_t j = 0; j < i; ++j) acc -= prev[j] * r[i - j];
    const double k = acc / err;
    a[i] = k;
    for (std::size_t j = 0; j < i; ++j) a[j] = prev[j] - k * prev[i - 1 - j];
    err *= (1.0 - k * k);
    prev = a;
    if (!(err > 0.0)) {
      err = 0.0;
      break;
    }
  }
  gain = err;
  return a;
}

}  // namespace empathy::dsp
