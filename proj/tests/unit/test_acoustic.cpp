#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "empathy/acoustic.hpp"
#include "empathy/dsp.hpp"
#include "empathy/functionals.hpp"
#include "empathy/stats.hpp"
#include "../support/oracles.hpp"

using namespace empathy;

namespace {

std::vector<double> windowed_power(const std::vector<double>& frame, std::size_t fft_size) {
  const auto w = dsp::hamming_window(frame.size());
  std::vector<double> x(frame.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = frame[i] * w[i];
  dsp::RealFft fft(fft_size);
  std::vector<double> p(fft.bins());
  fft.power(x, p);
  return p;
}

const LldTrack& track(const std::vector<LldTrack>& tracks, const std::string& name) {
  return *std::find_if(tracks.begin(), tracks.end(), [&](const auto& t) { return t.name == name; });
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

}  // namespace

TEST_CASE("centroid of a 1 kHz tone lies within one bin") {
  const auto a = oracle::sine(1000.0, 0.1);
  const auto p = windowed_power(oracle::to_double(a, 400, 200), 256);
  const auto s = dsp::spectral_llds(p, {}, 8000.0, 256);
  CHECK(std::abs(s.centroid_hz - 1000.0) <= 8000.0 / 256.0);
  CHECK(std::abs(s.pos_max_hz - 1000.0) <= 8000.0 / 256.0);
}

TEST_CASE("centroid of white noise is near half Nyquist") {
  double sum = 0.0;
  int n = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto a = oracle::white_noise(0.5, seed);
    for (std::size_t off = 0; off + 256 <= a.samples.size(); off += 256) {
      dsp::RealFft fft(256);
      std::vector<double> p(fft.bins());
      fft.power(oracle::to_double(a, off, 256), p);
      sum += dsp::spectral_llds(p, {}, 8000.0, 256).centroid_hz;
      ++n;
    }
  }
  CHECK(std::abs(sum / n - 2000.0) <= 0.02 * 2000.0);
}

TEST_CASE("zero-crossing rate of a sine is 2f/sr") {
  for (double f : {100.0, 440.0, 1000.0, 2500.0}) {
    const auto a = oracle::sine(f, 0.5);
    const double z = dsp::zero_crossing_rate(oracle::to_double(a, 0, 4000));
    CHECK(std::abs(z - 2.0 * f / 8000.0) <= 0.05 * 2.0 * f / 8000.0);
  }
}

TEST_CASE("sawtooth pitch and voicing") {
  const auto a = oracle::sawtooth(200.0, 1.0);
  AcousticExtractor ex;
  const auto t = ex.tracks(a, {0.1, 0.9});
  const auto& f0 = track(t, "f0").values;
  const auto& vp = track(t, "voicing_prob").values;
  CHECK(std::abs(median(f0) - 200.0) <= 2.0);
  CHECK(median(vp) > 0.8);
}

TEST_CASE("white noise is mostly unvoiced") {
  AcousticExtractor ex;
  long frames = 0, low = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto t = ex.tracks(oracle::white_noise(1.0, seed), {0.1, 0.9});
    for (double v : track(t, "voicing_prob").values) {
      ++frames;
      low += v < 0.3;
    }
  }
  CHECK(static_cast<double>(low) >= 0.9 * static_cast<double>(frames));
}

TEST_CASE("jitter of alternating periods") {
  std::vector<double> periods, amps;
  for (int i = 0; i < 20; ++i) {
    periods.push_back(i % 2 ? 0.0052 : 0.0050);
    amps.push_back(1.0);
  }
  const auto vq = dsp::voice_quality(periods, amps, 0.9);
  CHECK(vq.jitter_local == doctest::Approx(0.2 / 5.1).epsilon(1e-9));
  CHECK(std::abs(vq.jitter_local - 0.0392) < 1e-4);
  CHECK(vq.shimmer_local == doctest::Approx(0.0));
}

TEST_CASE("HNR of a pure tone reaches the cap") {
  AcousticExtractor ex;
  const auto t = ex.tracks(oracle::sine(200.0, 1.0), {0.1, 0.9});
  CHECK(median(track(t, "log_hnr").values) > 30.0);
  CHECK(dsp::hnr_db(1.0) == dsp::kMaxHnrDb);
  CHECK(dsp::hnr_db(0.5) == doctest::Approx(0.0));
}

TEST_CASE("rectangular filterbank conserves energy") {
  dsp::MelFilterbank fb(26, 256, 8000.0, 4000.0, dsp::FilterShape::Rectangular);
  dsp::RealFft fft(256);
  std::vector<double> p(fft.bins()), bands(26);
  fft.power(oracle::to_double(oracle::white_noise(0.1, 3), 0, 256), p);
  fb.apply(p, bands);
  CHECK(std::accumulate(bands.begin(), bands.end(), 0.0) ==
        doctest::Approx(std::accumulate(p.begin(), p.end(), 0.0)).epsilon(1e-9));
}

TEST_CASE("mel scale round trip") {
  for (double hz : {0.0, 100.0, 1000.0, 3999.0}) CHECK(dsp::mel_to_hz(dsp::hz_to_mel(hz)) == doctest::Approx(hz));
}

TEST_CASE("Levinson-Durbin recovers an AR(2) process") {
  // r for x[n] = 0.5 x[n-1] - 0.3 x[n-2] + e from the Yule-Walker relations
  const double a1 = 0.5, a2 = -0.3;
  const double rho1 = a1 / (1.0 - a2), rho2 = a1 * rho1 + a2;
  const std::vector<double> r = {1.0, rho1, rho2};
  double gain = 0.0;
  const auto a = dsp::levinson_durbin(r, 2, gain);
  CHECK(std::abs(a[0]) == doctest::Approx(0.5));
  CHECK(std::abs(a[1]) == doctest::Approx(0.3));
  CHECK(gain > 0.0);
}

TEST_CASE("functionals of an arithmetic sequence") {
  std::vector<double> t(100);
  std::iota(t.begin(), t.end(), 1.0);
  const auto r = compute_functionals(t);
  const auto& names = functional_names();
  auto get = [&](const std::string& n) {
    return r.values[static_cast<std::size_t>(std::find(names.begin(), names.end(), n) - names.begin())];
  };
  CHECK(get("linreg_slope") == doctest::Approx(1.0));
  CHECK(get("quartile1") == doctest::Approx(25.75));
  CHECK(get("quartile2") == doctest::Approx(50.5));
  CHECK(get("quartile3") == doctest::Approx(75.25));
  CHECK(get("mean") == doctest::Approx(50.5));
  CHECK(get("range") == doctest::Approx(99.0));
  CHECK(get("linreg_err") == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(r.values.size() == 42);
}

TEST_CASE("degenerate and empty tracks give zeros") {
  const std::vector<double> one = {3.0};
  const auto r = compute_functionals(one);
  CHECK(r.degenerate);
  CHECK(r.values.size() == functional_names().size());
  for (double v : r.values) CHECK(std::isfinite(v));
}

TEST_CASE("feature vector layout") {
  FrameConfig c;
  CHECK(lld_names(c).size() == 65);
  CHECK(acoustic_schema(c)->size() == 2730);
  const auto v = extract_segment_features(oracle::sine(200.0, 1.0), {0.1, 0.6}, c);
  CHECK(v.values.size() == 2730);
  CHECK(std::all_of(v.values.begin(), v.values.end(), [](double x) { return std::isfinite(x); }));
}

TEST_CASE("segment shorter than three frames is rejected") {
  AcousticExtractor ex;
  const auto a = oracle::sine(200.0, 1.0);
  CHECK_THROWS_AS(ex.features(a, {0.5, 0.5 + 0.5 * ex.min_duration_s()}), ValidationError);
  CHECK_THROWS_AS(ex.features(a, {0.5, 2.0}), ValidationError);
}

TEST_CASE("frame config round trip and validation") {
  FrameConfig c;
  c.n_mfcc = 12;
  c.band_shape = dsp::FilterShape::Rectangular;
  const auto back = FrameConfig::from_json(c.to_json());
  CHECK(back.n_mfcc == 12);
  CHECK(back.band_shape == dsp::FilterShape::Rectangular);
  FrameConfig bad;
  bad.window_ms = 5.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("pitch and loudness shifts separate synthetic pairs") {
  // 50 pairs of 15 s voiced segments; the second of each pair has F0 -20%
  // and -6 dB. Cohen's d of the mean-F0 and mean-loudness functionals.
  AcousticExtractor ex;
  const auto& fn = functional_names();
  const auto mean_idx = static_cast<std::size_t>(std::find(fn.begin(), fn.end(), "mean") - fn.begin());
  const auto ll = lld_names(ex.config());
  const auto f0_col = static_cast<std::size_t>(std::find(ll.begin(), ll.end(), "f0") - ll.begin()) * fn.size() + mean_idx;
  const auto loud_col = static_cast<std::size_t>(std::find(ll.begin(), ll.end(), "loudness") - ll.begin()) * fn.size() + mean_idx;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> f0_dist(150.0, 10.0);
  std::vector<double> f0_a, f0_b, ld_a, ld_b;
  for (int i = 0; i < 50; ++i) {
    const double f0 = f0_dist(rng);
    const auto a = oracle::sawtooth(f0, 15.0, 0.3);
    const auto b = oracle::sawtooth(0.8 * f0, 15.0, 0.3 * std::pow(10.0, -6.0 / 20.0));
    const auto va = ex.features(a, {0.0, 15.0}), vb = ex.features(b, {0.0, 15.0});
    f0_a.push_back(va[f0_col]);
    f0_b.push_back(vb[f0_col]);
    ld_a.push_back(va[loud_col]);
    ld_b.push_back(vb[loud_col]);
  }
  CHECK(std::abs(ttest_two_sample(f0_a, f0_b).d) > 0.8);
  CHECK(std::abs(ttest_two_sample(ld_a, ld_b).d) > 0.8);
}
