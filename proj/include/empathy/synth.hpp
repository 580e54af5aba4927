#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "empathy/corpus.hpp"

namespace empathy {

struct SynthSpec {
  std::size_t n_conversations = 100;
  std::uint64_t seed = 1;

  // agent segment durations: truncated normals with these moments
  double neutral_mean_s = 220.0;
  double neutral_std_s = 148.0;
  double neutral_min_s = 10.0;
  double empathy_mean_s = 19.0;
  double empathy_std_s = 13.0;
  double empathy_min_s = 3.0;
  double tail_min_s = 5.0;  // neutral speech after the empathy segment
  double tail_max_s = 20.0;

  double utterance_min_s = 2.0;
  double utterance_max_s = 5.0;
  double pause_min_s = 0.25;
  double pause_max_s = 0.5;

  // class signature of the empathy segment
  double pitch_shift_pct = -20.0;
  double loudness_shift_db = -6.0;
  std::vector<std::string> keywords = {"vediamo un po'", "non si preoccupi", "assolutamente"};
  double keyword_rate = 1.0;          // share of empathy utterances carrying a keyword phrase
  double neutral_keyword_rate = 0.0;  // the same for neutral utterances

  double speaker_f0_mean_hz = 150.0;
  double speaker_f0_std_hz = 10.0;
  double speaker_level_dbfs = -20.0;
  double speaker_level_jitter_db = 2.0;
  double noise_floor_dbfs = -60.0;

  double anger_rate = 0.3;  // conversations with an Anger/Frustration customer segment
  bool second_annotator = true;
  double annotator_jitter_s = 4.0;
  double annotator_miss_rate = 0.15;

  std::string id_prefix = "conv";

  /// Same spec with no acoustic or lexical difference between the classes.
  SynthSpec without_shift() const;
  void validate() const;
};

/// Parent normal (mu, sigma) whose truncation to [lower, inf) has the given
/// mean and standard deviation.
std::pair<double, double> truncated_normal_parent(double mean, double stddev, double lower);

/// Writes `<out_dir>/audio/<id>_{agent,customer}.wav` and
/// `<out_dir>/manifest.json`; returns the corpus as written. Each conversation
/// is generated from its own seed derived from `spec.seed` and its id.
Corpus generate(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace empathy
