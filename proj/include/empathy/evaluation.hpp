#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "empathy/corpus.hpp"
#include "empathy/types.hpp"

namespace empathy {

/// A classified automatic segment.
struct LabeledSpan {
  double start_s = 0.0;
  double end_s = 0.0;
  Label label = Label::Neutral;
  double margin = 0.0;

  double length() const { return end_s - start_s; }
};

struct AlignedSpan {
  double start_s = 0.0;
  double end_s = 0.0;
  Label ref = Label::Neutral;
  Label hyp = Label::Neutral;
  bool gap = false;  // not covered by any automatic segment

  double length() const { return end_s - start_s; }
};

struct AlignOptions {
  /// Label given to uncovered time; gaps are always flagged.
  Label gap_label = Label::Neutral;
  /// When false, gap spans are left out of the confusion matrix.
  bool score_gaps = true;
};

/// Splits the automatic segments at every reference boundary and fills
/// uncovered time with gap spans, so the result partitions [0, t_e] where t_e
/// is the end of the last reference segment. Reference segments must be
/// contiguous from 0 and labeled Neutral or Empathy; automatic segments must be
/// sorted and non-overlapping. Anything after t_e is dropped. A boundary
/// instant belongs to the span on its right.
std::vector<AlignedSpan> align(const std::vector<Segment>& reference,
                               const std::vector<LabeledSpan>& hypothesis,
                               const AlignOptions& options = {});

/// Seconds per (reference, hypothesis) cell; Empathy is the positive class.
struct WeightedConfusion {
  double tp = 0.0;  // ref Empathy, hyp Empathy
  double fn = 0.0;  // ref Empathy, hyp Neutral
  double fp = 0.0;  // ref Neutral, hyp Empathy
  double tn = 0.0;  // ref Neutral, hyp Neutral

  double total() const { return tp + fn + fp + tn; }
  WeightedConfusion& operator+=(const WeightedConfusion& o);
};

WeightedConfusion weighted_confusion(const std::vector<AlignedSpan>& spans,
                                     const AlignOptions& options = {});

/// 1/2 (tp/(tp+fn) + tn/(tn+fp)); throws when a class has no reference time.
double unweighted_average(const WeightedConfusion& conf);

/// Neutral [0, t_i] followed by Empathy [t_i, t_e].
std::vector<Segment> reference_segments(const SegmentPair& pair);

/// conversation id -> classified automatic segments
using Hypothesis = std::map<std::string, std::vector<LabeledSpan>>;

Hypothesis load_hypothesis(const std::filesystem::path& path);
void save_hypothesis(const Hypothesis& hyp, const std::filesystem::path& path);

struct ScoreReport {
  std::map<std::string, WeightedConfusion> per_conversation;
  std::map<std::string, double> per_conversation_ua;  // only where both classes occur
  WeightedConfusion pooled;
  double ua = 0.0;
  double gap_seconds = 0.0;
  std::vector<std::string> warnings;

  std::string to_json() const;
  std::string summary() const;
};

/// Pools duration-weighted confusions over all pairs. Conversations without
/// hypothesis segments are scored as one gap.
ScoreReport score(const std::vector<SegmentPair>& pairs, const Hypothesis& hyp,
                  const AlignOptions& options = {});

}  // namespace empathy
