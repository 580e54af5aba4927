#pragma once

#include <string>
#include <vector>

#include "empathy/dsp.hpp"
#include "empathy/features.hpp"
#include "empathy/types.hpp"
#include "empathy/wav.hpp"

namespace empathy {

struct FrameConfig {
  int sample_rate = kSampleRate;
  double rate_fps = 100.0;
  double window_ms = 25.0;     // Hamming window for spectral and energy LLDs
  double vq_window_ms = 60.0;  // Gaussian window for pitch and voice quality
  double vq_sigma = 0.4;
  double preemphasis_k = 0.97;
  std::size_t fft_size = 256;
  std::size_t n_mfcc = 14;
  std::size_t n_bands = 26;
  double band_max_hz = 4000.0;
  dsp::FilterShape band_shape = dsp::FilterShape::Triangular;
  double min_f0_hz = 60.0;
  double max_f0_hz = 500.0;
  double voicing_threshold = 0.45;

  std::size_t hop_samples() const;
  std::size_t window_samples() const;
  std::size_t vq_window_samples() const;
  /// Throws ValidationError when a window is shorter than the hop or does not
  /// fit into the FFT.
  void validate() const;

  std::string to_json() const;
  static FrameConfig from_json(const std::string& text);
};

struct LldTrack {
  std::string name;
  std::vector<double> values;
  double rate_fps = 100.0;
};

/// LLD names in track order.
std::vector<std::string> lld_names(const FrameConfig& config);
/// `<lld>__<functional>` for every LLD and functional.
std::vector<std::string> acoustic_feature_names(const FrameConfig& config);
SchemaPtr acoustic_schema(const FrameConfig& config);

/// Number of frames for a segment of `duration_s` seconds.
std::size_t frame_count(double duration_s, double rate_fps);

/// Per-frame LLD extraction and functionals. Frame i of a segment starting at
/// sample s covers [s + i*hop, s + i*hop + window); the voice-quality window is
/// centred on the same point. Samples outside the audio read as zero.
class AcousticExtractor {
 public:
  explicit AcousticExtractor(FrameConfig config = {});

  const FrameConfig& config() const { return config_; }
  const SchemaPtr& schema() const { return schema_; }
  /// Shortest accepted segment (three frames).
  double min_duration_s() const;

  std::vector<LldTrack> tracks(const Audio& audio, const Span& span) const;
  /// Throws ValidationError when the segment is shorter than min_duration_s()
  /// or lies outside the audio.
  std::vector<double> features(const Audio& audio, const Span& span) const;

 private:
  FrameConfig config_;
  SchemaPtr schema_;
  dsp::MelFilterbank filterbank_;
  std::vector<double> hamming_;
};

FeatureVector extract_segment_features(const Audio& audio, const Span& span,
                                       const FrameConfig& config = {});

}  // namespace empathy
