#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "empathy/types.hpp"
#include "empathy/wav.hpp"

namespace empathy {

struct VadConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  double energy_threshold_db = -30.0;  // relative to the median log-energy of non-silent frames
  double min_speech_ms = 200.0;
  double min_gap_ms = 150.0;

  void validate() const;
};

/// Speech/non-speech segmenter interface. The energy detector below is the
/// default; a model-based segmenter can be plugged in behind the same call.
class SpeechSegmenter {
 public:
  virtual ~SpeechSegmenter() = default;
  virtual std::vector<Span> segment(const Audio& audio) const = 0;
};

class EnergySegmenter final : public SpeechSegmenter {
 public:
  explicit EnergySegmenter(VadConfig config = {});
  std::vector<Span> segment(const Audio& audio) const override;
  const VadConfig& config() const { return config_; }

 private:
  VadConfig config_;
};

std::vector<Span> segment_speech(const Audio& audio, const VadConfig& config = {});

/// Per-frame speech decision before smoothing.
std::vector<bool> raw_speech_mask(const Audio& audio, const VadConfig& config);

/// Merges gaps shorter than min_gap, then drops runs shorter than min_speech.
std::vector<bool> smooth_mask(std::vector<bool> mask, const VadConfig& config);

std::vector<Span> mask_to_spans(const std::vector<bool>& mask, const VadConfig& config);
std::vector<bool> spans_to_mask(std::span<const Span> spans, std::size_t n_frames,
                                const VadConfig& config);

struct VadScore {
  double precision = 0.0;
  std::optional<double> recall;  // empty when the reference has no speech
  std::optional<double> f1;
  long ref_frames = 0;
  long hyp_frames = 0;
  long hit_frames = 0;
};

/// Frame-level precision/recall/F1. A frame is speech when its centre lies
/// inside a span.
VadScore vad_f_measure(std::span<const Span> ref, std::span<const Span> hyp,
                       double frame_ms = 10.0);

std::string spans_to_json(std::span<const Span> spans);
std::vector<Span> spans_from_json(const std::string& text);

}  // namespace empathy
