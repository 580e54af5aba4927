#include "empathy/acoustic.hpp"

#include <cmath>

#include <json.hpp>

#include "empathy/functionals.hpp"

namespace empathy {

namespace {

std::size_t ms_to_samples(double ms, int sample_rate) {
  return static_cast<std::size_t>(std::lround(ms * sample_rate / 1000.0));
}

constexpr const char* kSpectralNames[] = {
    "spec_centroid",       "spec_flux",          "spec_rolloff25",    "spec_rolloff50",
    "spec_rolloff75",      "spec_rolloff90",     "spec_energy_0_650", "spec_energy_250_650",
    "spec_energy_1k_4k",   "spec_variance",      "spec_skewness",     "spec_kurtosis",
    "spec_entropy",        "spec_slope",         "spec_pos_max",      "spec_pos_min"};

constexpr const char* kVoiceNames[] = {"f0",         "voicing_prob",  "jitter_local",
                                       "jitter_ddp", "shimmer_local", "log_hnr"};

}  // namespace

std::size_t FrameConfig::hop_samples() const {
  return static_cast<std::size_t>(std::lround(sample_rate / rate_fps));
}
std::size_t FrameConfig::window_samples() const { return ms_to_samples(window_ms, sample_rate); }
std::size_t FrameConfig::vq_window_samples() const {
  return ms_to_samples(vq_window_ms, sample_rate);
}

void FrameConfig::validate() const {
  if (sample_rate <= 0 || !(rate_fps > 0.0)) throw ValidationError("frame rate must be positive");
  if (hop_samples() == 0) throw ValidationError("hop must be at least one sample");
  if (window_samples() < hop_samples() || vq_window_samples() < hop_samples())
    throw ValidationError("analysis windows must be at least one hop long");
  if (fft_size < window_samples())
    throw ValidationError("fft_size " + std::to_string(fft_size) + " is shorter than the " +
                          std::to_string(window_samples()) + "-sample window");
  if (preemphasis_k < 0.0 || preemphasis_k >= 1.0)
    throw ValidationError("preemphasis_k must be in [0, 1)");
  if (!(vq_sigma > 0.0)) throw ValidationError("vq_sigma must be positive");
  if (!(min_f0_hz > 0.0) || !(max_f0_hz > min_f0_hz))
    throw ValidationError("pitch range must satisfy 0 < min_f0_hz < max_f0_hz");
  if (static_cast<double>(vq_window_samples()) < 2.0 * sample_rate / min_f0_hz)
    throw ValidationError("vq_window_ms must cover two periods of min_f0_hz");
  if (n_bands == 0 || n_mfcc == 0) throw ValidationError("n_bands and n_mfcc must be positive");
  if (!(band_max_hz > 0.0) || band_max_hz > sample_rate / 2.0)
    throw ValidationError("band_max_hz must lie in (0, Nyquist]");
}

std::string FrameConfig::to_json() const {
  nlohmann::json j = {{"sample_rate", sample_rate},
                      {"rate_fps", rate_fps},
                      {"window_ms", window_ms},
                      {"window", "hamming"},
                      {"vq_window_ms", vq_window_ms},
                      {"vq_window", "gaussian"},
                      {"vq_sigma", vq_sigma},
                      {"preemphasis_k", preemphasis_k},
                      {"fft_size", fft_size},
                      {"n_mfcc", n_mfcc},
                      {"n_bands", n_bands},
                      {"band_max_hz", band_max_hz},
                      {"band_shape", band_shape == dsp::FilterShape::Triangular ? "triangular"
                                                                                 : "rectangular"},
                      {"min_f0_hz", min_f0_hz},
                      {"max_f0_hz", max_f0_hz},
                      {"voicing_threshold", voicing_threshold}};
  return j.dump(2);
}

FrameConfig FrameConfig::from_json(const std::string& text) {
  FrameConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.sample_rate = j.value("sample_rate", c.sample_rate);
    c.rate_fps = j.value("rate_fps", c.rate_fps);
    c.window_ms = j.value("window_ms", c.window_ms);
    c.vq_window_ms = j.value("vq_window_ms", c.vq_window_ms);
    c.vq_sigma = j.value("vq_sigma", c.vq_sigma);
    c.preemphasis_k = j.value("preemphasis_k", c.preemphasis_k);
    c.fft_size = j.value("fft_size", c.fft_size);
    c.n_mfcc = j.value("n_mfcc", c.n_mfcc);
    c.n_bands = j.value("n_bands", c.n_bands);
    c.band_max_hz = j.value("band_max_hz", c.band_max_hz);
    c.band_shape = j.value("band_shape", std::string("triangular")) == "rectangular"
                       ? dsp::FilterShape::Rectangular
                       : dsp::FilterShape::Triangular;
    c.min_f0_hz = j.value("min_f0_hz", c.min_f0_hz);
    c.max_f0_hz = j.value("max_f0_hz", c.max_f0_hz);
    c.voicing_threshold = j.value("voicing_threshold", c.voicing_threshold);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("frame config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<std::string> lld_names(const FrameConfig& config) {
  std::vector<std::string> names = {"rms_energy", "loudness", "zcr"};
  for (const char* n : kSpectralNames) names.emplace_back(n);
  for (std::size_t i = 1; i <= config.n_mfcc; ++i) names.push_back("mfcc" + std::to_string(i));
  for (std::size_t i = 0; i < config.n_bands; ++i) names.push_back("band" + std::to_string(i));
  for (const char* n : kVoiceNames) names.emplace_back(n);
  return names;
}

std::vector<std::string> acoustic_feature_names(const FrameConfig& config) {
  std::vector<std::string> out;
  for (const auto& lld : lld_names(config))
    for (const auto& f : functional_names()) out.push_back(lld + "__" + f);
  return out;
}

SchemaPtr acoustic_schema(const FrameConfig& config) {
  auto s = std::make_shared<FeatureSchema>();
  s->id = "acoustic";
  s->names = acoustic_feature_names(config);
  return s;
}

std::size_t frame_count(double duration_s, double rate_fps) {
  if (!(duration_s > 0.0)) return 0;
  return static_cast<std::size_t>(std::ceil(duration_s * rate_fps - 1e-6));
}

AcousticExtractor::AcousticExtractor(FrameConfig config)
    : config_((config.validate(), config)),
      schema_(acoustic_schema(config_)),
      filterbank_(config_.n_bands, config_.fft_size, config_.sample_rate, config_.band_max_hz,
                  config_.band_shape),
      hamming_(dsp::hamming_window(config_.window_samples())) {}

double AcousticExtractor::min_duration_s() const { return 3.0 / config_.rate_fps; }

std::vector<LldTrack> AcousticExtractor::tracks(const Audio& audio, const Span& span) const {
  const auto& c = config_;
  const std::size_t n_frames = frame_count(span.length(), c.rate_fps);
  const auto names = lld_names(c);
  std::vector<LldTrack> out(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    out[i].name = names[i];
    out[i].rate_fps = c.rate_fps;
    out[i].values.assign(n_frames, 0.0);
  }

  const std::size_t hop = c.hop_samples();
  const std::size_t win = c.window_samples();
  const std::size_t vq_win = c.vq_window_samples();
  const auto total = static_cast<long>(audio.samples.size());
  auto sample = [&](long i) {
    return i >= 0 && i < total ? static_cast<double>(audio.samples[static_cast<std::size_t>(i)])
                               : 0.0;
  };

  dsp::RealFft fft(c.fft_size);
  dsp::PitchTracker pitch(vq_win, c.sample_rate, c.vq_sigma, c.min_f0_hz, c.max_f0_hz,
                          c.voicing_threshold);
  std::vector<double> frame(win), emph(win), windowed(win), vq_frame(vq_win);
  std::vector<double> power(fft.bins()), previous, bands(c.n_bands);

  const long seg_start = std::lround(span.start_s * c.sample_rate);
  const long vq_offset = static_cast<long>(win) / 2 - static_cast<long>(vq_win) / 2;
  for (std::size_t f = 0; f < n_frames; ++f) {
    const long start = seg_start + static_cast<long>(f * hop);
    for (std::size_t i = 0; i < win; ++i) frame[i] = sample(start + static_cast<long>(i));
    // pre-emphasis continues from the sample preceding the frame
    const double before = start > 0 ? sample(start - 1) : frame[0];
    emph[0] = frame[0] - (start > 0 ? c.preemphasis_k * before : 0.0);
    for (std::size_t i = 1; i < win; ++i) emph[i] = frame[i] - c.preemphasis_k * frame[i - 1];
    for (std::size_t i = 0; i < win; ++i) windowed[i] = emph[i] * hamming_[i];
    fft.power(windowed, power);

    std::size_t k = 0;
    auto put = [&](double v) { out[k++].values[f] = std::isfinite(v) ? v : 0.0; };
    filterbank_.apply(power, bands);
    put(dsp::rms_energy(frame));
    put(dsp::loudness(bands));
    put(dsp::zero_crossing_rate(frame));

    const auto s = dsp::spectral_llds(power, previous, c.sample_rate, c.fft_size);
    for (double v : {s.centroid_hz, s.flux, s.rolloff25, s.rolloff50, s.rolloff75, s.rolloff90,
                     s.energy_0_650, s.energy_250_650, s.energy_1k_4k, s.variance, s.skewness,
                     s.kurtosis, s.entropy, s.slope, s.pos_max_hz, s.pos_min_hz})
      put(v);
    previous = power;

    for (double v : dsp::mfcc_from_bands(bands, c.n_mfcc)) put(v);
    for (double v : bands) put(v);

    const long vq_start = start + vq_offset;
    for (std::size_t i = 0; i < vq_win; ++i) vq_frame[i] = sample(vq_start + static_cast<long>(i));
    const auto est = pitch.estimate(vq_frame);
    put(est.f0_hz);
    put(est.voicing_prob);
    dsp::VoiceQuality vq;
    if (est.f0_hz > 0.0) {
      const auto periods = dsp::find_periods(vq_frame, est.lag_samples, c.sample_rate);
      vq = dsp::voice_quality(periods.periods_s, periods.amplitudes, pitch.last_peak());
    }
    if (vq.unvoiced) vq = {};
    put(vq.jitter_local);
    put(vq.jitter_ddp);
    put(vq.shimmer_local);
    put(vq.log_hnr);
  }
  return out;
}

std::vector<double> AcousticExtractor::features(const Audio& audio, const Span& span) const {
  if (span.start_s < 0.0 || span.end_s > audio.duration() + 1e-3)
    throw ValidationError("segment [" + std::to_string(span.start_s) + ", " +
                          std::to_string(span.end_s) + "] lies outside the audio (" +
                          std::to_string(audio.duration()) + " s)");
  if (frame_count(span.length(), config_.rate_fps) < 3)
    throw ValidationError("segment of " + std::to_string(span.length()) +
                          " s is shorter than the minimum duration of " +
                          std::to_string(min_duration_s()) + " s (3 frames)");
  std::vector<double> values;
  values.reserve(schema_->size());
  for (const auto& track : tracks(audio, span)) {
    const auto f = compute_functionals(track.values, track.rate_fps);
    values.insert(values.end(), f.values.begin(), f.values.end());
  }
  return values;
}

FeatureVector extract_segment_features(const Audio& audio, const Span& span,
                                       const FrameConfig& config) {
  AcousticExtractor extractor(config);
  return {extractor.schema(), extractor.features(audio, span)};
}

}  // namespace empathy
