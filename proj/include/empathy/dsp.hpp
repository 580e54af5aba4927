#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace empathy::dsp {

/// y[0] = x[0], y[n] = x[n] - k x[n-1].
std::vector<double> preemphasize(std::span<const double> signal, double k);

std::vector<double> hamming_window(std::size_t n);
/// Gaussian window with standard deviation sigma * (n-1)/2 around the centre.
std::vector<double> gaussian_window(std::size_t n, double sigma);

/// Real-input FFT of fixed size backed by FFTW. Not copyable; one instance per
/// thread.
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return size_; }
  std::size_t bins() const { return size_ / 2 + 1; }

  /// |X_k|^2 for k = 0..size/2 of `frame` zero-padded to size().
  void power(std::span<const double> frame, std::span<double> out);
  /// Circular autocorrelation of `frame` zero-padded to size(), lags 0..size/2.
  void autocorrelation(std::span<const double> frame, std::span<double> out);

 private:
  struct Impl;
  std::size_t size_;
  std::unique_ptr<Impl> impl_;
};

inline double bin_frequency(std::size_t bin, std::size_t fft_size, double sample_rate) {
  return static_cast<double>(bin) * sample_rate / static_cast<double>(fft_size);
}

struct SpectralLlds {
  double centroid_hz = 0.0;
  double flux = 0.0;
  double rolloff25 = 0.0;
  double rolloff50 = 0.0;
  double rolloff75 = 0.0;
  double rolloff90 = 0.0;
  double energy_0_650 = 0.0;
  double energy_250_650 = 0.0;
  double energy_1k_4k = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
  double entropy = 0.0;
  double slope = 0.0;
  double pos_max_hz = 0.0;
  double pos_min_hz = 0.0;
  bool silent = false;  // all-zero spectrum; shape descriptors are reported as 0
};

/// Sum of power over bins whose frequency cell [f - df/2, f + df/2] intersects [lo, hi].
double band_energy(std::span<const double> power, double sample_rate, std::size_t fft_size,
                   double lo_hz, double hi_hz);

/// Shape descriptors of one power spectrum. `previous` is the previous frame's
/// spectrum for flux; pass an empty span for the first frame.
SpectralLlds spectral_llds(std::span<const double> power, std::span<const double> previous,
                           double sample_rate, std::size_t fft_size);

enum class FilterShape { Triangular, Rectangular };

/// Mel-spaced filterbank over [0, max_hz]. Rectangular filters partition the
/// bins exactly, so their energies sum to the total spectral energy.
class MelFilterbank {
 public:
  MelFilterbank(std::size_t n_filters, std::size_t fft_size, double sample_rate, double max_hz,
                FilterShape shape = FilterShape::Triangular);

  std::size_t size() const { return weights_.size(); }
  void apply(std::span<const double> power, std::span<double> out) const;

 private:
  struct Filter {
    std::size_t first = 0;
    std::vector<double> w;
  };
  std::vector<Filter> weights_;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Coefficients 1..n_coeffs of DCT-II over log band energies.
std::vector<double> mfcc_from_bands(std::span<const double> bands, std::size_t n_coeffs = 14);

/// Stevens-law loudness approximation: sum of band energies raised to 0.3.
double loudness(std::span<const double> bands);

/// Sign changes per sample. Zero counts as positive.
double zero_crossing_rate(std::span<const double> frame);
double rms_energy(std::span<const double> frame);

struct PitchEstimate {
  double f0_hz = 0.0;
  double voicing_prob = 0.0;
  double lag_samples = 0.0;
};

/// Autocorrelation pitch detector with window-normalised autocorrelation and
/// parabolic peak interpolation.
class PitchTracker {
 public:
  PitchTracker(std::size_t window_samples, double sample_rate, double sigma = 0.4,
               double min_f0 = 60.0, double max_f0 = 500.0, double voicing_threshold = 0.45);

  std::size_t window_samples() const { return window_.size(); }
  /// `frame` must hold window_samples() samples.
  PitchEstimate estimate(std::span<const double> frame);
  /// Normalised autocorrelation peak of the last estimate (0 when none).
  double last_peak() const { return last_peak_; }

 private:
  std::vector<double> window_;
  std::vector<double> window_acf_;
  double sample_rate_;
  double min_f0_;
  double max_f0_;
  double threshold_;
  RealFft fft_;
  std::vector<double> buffer_;
  std::vector<double> acf_;
  double last_peak_ = 0.0;
};

struct PeriodData {
  std::vector<double> periods_s;
  std::vector<double> amplitudes;
};

/// Pitch marks in `frame` given an estimated period, as consecutive period
/// lengths and per-period peak-to-peak amplitudes.
PeriodData find_periods(std::span<const double> frame, double period_samples, double sample_rate);

struct VoiceQuality {
  double jitter_local = 0.0;
  double jitter_ddp = 0.0;
  double shimmer_local = 0.0;
  double log_hnr = 0.0;
  bool unvoiced = true;
};

inline constexpr double kMaxHnrDb = 60.0;
inline constexpr double kMinHnrDb = -20.0;

/// Jitter/shimmer from consecutive periods and amplitudes; HNR in dB from the
/// normalised autocorrelation peak `acf_peak`.
VoiceQuality voice_quality(std::span<const double> periods_s, std::span<const double> amplitudes,
                           double acf_peak);

double hnr_db(double acf_peak);

/// Levinson-Durbin on autocorrelation r[0..order]. Returns predictor
/// coefficients a_1..a_order and writes the residual energy to `gain`.
std::vector<double> levinson_durbin(std::span<const double> r, std::size_t order, double& gain);

}  // namespace empathy::dsp
