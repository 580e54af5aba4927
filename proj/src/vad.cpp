#include "empathy/vad.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace empathy {

void VadConfig::validate() const {
  if (!(hop_ms > 0.0) || frame_ms < hop_ms)
    throw ValidationError("VAD config requires frame_ms >= hop_ms > 0");
  if (min_speech_ms < 0.0 || min_gap_ms < 0.0)
    throw ValidationError("VAD smoothing durations must be >= 0");
}

namespace {

struct FrameGeometry {
  std::size_t frame = 0;
  std::size_t hop = 0;
};

FrameGeometry geometry(const VadConfig& config, int sample_rate) {
  FrameGeometry g;
  g.frame = static_cast<std::size_t>(std::lround(config.frame_ms * sample_rate / 1000.0));
  g.hop = static_cast<std::size_t>(std::lround(config.hop_ms * sample_rate / 1000.0));
  if (g.hop == 0 || g.frame < g.hop) throw ValidationError("VAD frame geometry is degenerate");
  return g;
}

std::size_t frames_needed(std::size_t n, const FrameGeometry& g) {
  if (n == 0) return 0;
  if (n <= g.frame) return 1;
  return (n - g.frame + g.hop - 1) / g.hop + 1;
}

}  // namespace

std::vector<bool> raw_speech_mask(const Audio& audio, const VadConfig& config) {
  config.validate();
  const auto g = geometry(config, audio.sample_rate);
  const std::size_t n_frames = frames_needed(audio.samples.size(), g);
  std::vector<double> energy(n_frames, 0.0);
  for (std::size_t i = 0; i < n_frames; ++i) {
    const std::size_t begin = i * g.hop;
    const std::size_t end = std::min(begin + g.frame, audio.samples.size());
    double e = 0.0;
    for (std::size_t k = begin; k < end; ++k) e += static_cast<double>(audio.samples[k]) * audio.samples[k];
    energy[i] = e;
  }

  std::vector<double> db;
  db.reserve(n_frames);
  for (double e : energy)
    if (e > 0.0) db.push_back(10.0 * std::log10(e));
  std::vector<bool> mask(n_frames, false);
  if (db.empty()) return mask;

  auto mid = db.begin() + static_cast<std::ptrdiff_t>(db.size() / 2);
  std::nth_element(db.begin(), mid, db.end());
  const double median = *mid;
  const double threshold = median + config.energy_threshold_db;
  for (std::size_t i = 0; i < n_frames; ++i)
    mask[i] = energy[i] > 0.0 && 10.0 * std::log10(energy[i]) > threshold;
  return mask;
}

std::vector<bool> smooth_mask(std::vector<bool> mask, const VadConfig& config) {
  const double hop = config.hop_ms;
  const std::size_t n = mask.size();

  // fill short interior gaps
  std::size_t i = 0;
  while (i < n && !mask[i]) ++i;
  while (i < n) {
    while (i < n && mask[i]) ++i;
    const std::size_t gap_begin = i;
    while (i < n && !mask[i]) ++i;
    if (i < n && static_cast<double>(i - gap_begin) * hop < config.min_gap_ms)
      std::fill(mask.begin() + static_cast<std::ptrdiff_t>(gap_begin),
                mask.begin() + static_cast<std::ptrdiff_t>(i), true);
  }

  // drop short runs
  i = 0;
  while (i < n) {
    while (i < n && !mask[i]) ++i;
    const std::size_t run_begin = i;
    while (i < n && mask[i]) ++i;
    if (i > run_begin && static_cast<double>(i - run_begin) * hop < config.min_speech_ms)
      std::fill(mask.begin() + static_cast<std::ptrdiff_t>(run_begin),
                mask.begin() + static_cast<std::ptrdiff_t>(i), false);
  }
  return mask;
}

std::vector<Span> mask_to_spans(const std::vector<bool>& mask, const VadConfig& config) {
  const double hop = config.hop_ms / 1000.0;
  const double centre0 = config.frame_ms / 2000.0;
  std::vector<Span> spans;
  std::size_t i = 0;
  while (i < mask.size()) {
    if (!mask[i]) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    while (i < mask.size() && mask[i]) ++i;
    const double start = std::max(0.0, centre0 + static_cast<double>(begin) * hop - hop / 2.0);
    const double end = centre0 + static_cast<double>(i - 1) * hop + hop / 2.0;
    spans.push_back({start, end});
  }
  return spans;
}

std::vector<bool> spans_to_mask(std::span<const Span> spans, std::size_t n_frames,
                                const VadConfig& config) {
  const double hop = config.hop_ms / 1000.0;
  const double centre0 = config.frame_ms / 2000.0;
  std::vector<bool> mask(n_frames, false);
  for (std::size_t i = 0; i < n_frames; ++i) {
    const double c = centre0 + static_cast<double>(i) * hop;
    for (const auto& s : spans)
      if (c >= s.start_s && c < s.end_s) {
        mask[i] = true;
        break;
      }
  }
  return mask;
}

std::vector<Span> segment_speech(const Audio& audio, const VadConfig& config) {
  return mask_to_spans(smooth_mask(raw_speech_mask(audio, config), config), config);
}

EnergySegmenter::EnergySegmenter(VadConfig config) : config_(config) { config_.validate(); }

std::vector<Span> EnergySegmenter::segment(const Audio& audio) const {
  return segment_speech(audio, config_);
}

VadScore vad_f_measure(std::span<const Span> ref, std::span<const Span> hyp, double frame_ms) {
  if (!(frame_ms > 0.0)) throw ValidationError("frame_ms must be > 0");
  double end = 0.0;
  for (const auto& s : ref) end = std::max(end, s.end_s);
  for (const auto& s : hyp) end = std::max(end, s.end_s);
  const double step = frame_ms / 1000.0;
  const auto n = static_cast<long>(std::ceil(end / step));

  auto inside = [](std::span<const Span> spans, double t) {
    return std::any_of(spans.begin(), spans.end(),
                       [t](const Span& s) { return t >= s.start_s && t < s.end_s; });
  };
  VadScore score;
  for (long i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) * step;
    const bool r = inside(ref, t);
    const bool h = inside(hyp, t);
    score.ref_frames += r;
    score.hyp_frames += h;
    score.hit_frames += r && h;
  }
  score.precision = score.hyp_frames == 0
                        ? 0.0
                        : static_cast<double>(score.hit_frames) / static_cast<double>(score.hyp_frames);
  if (score.ref_frames > 0) {
    score.recall = static_cast<double>(score.hit_frames) / static_cast<double>(score.ref_frames);
    const double pr = score.precision + *score.recall;
    score.f1 = pr > 0.0 ? 2.0 * score.precision * *score.recall / pr : 0.0;
  }
  return score;
}

std::string spans_to_json(std::span<const Span> spans) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : spans) j.push_back({s.start_s, s.end_s});
  return j.dump();
}

std::vector<Span> spans_from_json(const std::string& text) {
  std::vector<Span> spans;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_array()) throw ValidationError("span list must be a JSON array");
    for (const auto& item : j) {
      if (!item.is_array() || item.size() != 2)
        throw ValidationError("span must be a [start_s, end_s] pair");
      spans.push_back({item[0].get<double>(), item[1].get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("span list: ") + e.what());
  }
  return spans;
}

}  // namespace empathy
