#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "empathy/types.hpp"

namespace empathy {

struct TranscriptEntry {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string text;
};

struct Conversation {
  std::string id;
  std::string speaker_id;
  std::filesystem::path agent_wav;
  std::filesystem::path customer_wav;
  double duration_s = 0.0;
  /// annotator id -> segments on both channels, sorted by (channel, start_s)
  std::map<std::string, std::vector<Segment>> tiers;
  std::map<Channel, std::vector<TranscriptEntry>> transcripts;

  /// Tier used as reference: the lexicographically first annotator.
  const std::vector<Segment>& reference_tier() const;
  std::vector<Segment> segments(const std::string& annotator, Channel channel) const;
};

using Corpus = std::vector<Conversation>;

/// Parses a corpus manifest. Audio paths are resolved relative to the
/// manifest's directory and their headers are read to obtain the duration.
/// Throws ValidationError naming the conversation on any violated invariant.
Corpus load_manifest(const std::filesystem::path& path);

/// Writes `corpus` in manifest format. Audio paths are written relative to
/// the manifest's directory when possible.
void save_manifest(const Corpus& corpus, const std::filesystem::path& path);

/// Checks segment ordering, overlap, range and label/channel rules.
void validate_conversation(const Conversation& conversation);

struct SegmentPair {
  std::string conversation_id;
  Segment neutral;
  Segment empathy;
};

struct PairExtraction {
  std::vector<SegmentPair> pairs;        // sorted by conversation id
  std::vector<std::string> skipped_ids;  // first Empathy onset at 0
};

/// One neutral/empathy pair per conversation from the first Empathy segment on
/// the agent channel of `annotator` (default: reference tier).
PairExtraction extract_segment_pairs(const Corpus& corpus,
                                     const std::optional<std::string>& annotator = std::nullopt);

struct CooccurrenceTable {
  // [customer row][agent column]; row 0 = Anger or Frustration, row 1 = Neutral;
  // column 0 = Empathy, column 1 = Neutral.
  std::array<std::array<long, 2>, 2> counts{};
  long total() const;
  double percent(int row, int col) const;
};

CooccurrenceTable cooccurrence(const Corpus& corpus,
                               const std::optional<std::string>& annotator = std::nullopt);
CooccurrenceTable cooccurrence_from_counts(long emp_af, long neu_af, long emp_neu, long neu_neu);

/// conversation id -> segments of one annotator.
using AnnotationSet = std::map<std::string, std::vector<Segment>>;

AnnotationSet annotation_set(const Corpus& corpus, const std::string& annotator);

struct KappaResult {
  double kappa = 0.0;
  double percent_agreement = 0.0;  // 100 * observed agreement over conversations
  double onset_agreement = 0.0;    // % of doubly-marked conversations with identical onset
  long both_yes = 0;               // both marked, onsets within tolerance
  long both_yes_mismatch = 0;      // both marked, onsets too far apart
  long a_only = 0;
  long b_only = 0;
  long both_no = 0;
};

/// Cohen's kappa over per-conversation decisions. A conversation counts as an
/// agreement when neither tier has `label`, or when both do and their first
/// onsets differ by at most `tolerance_s`.
KappaResult kappa_with_tolerance(const AnnotationSet& a, const AnnotationSet& b,
                                 double tolerance_s, Label label = Label::Empathy);

/// Plain Cohen's kappa on a 2x2 table of counts.
double cohen_kappa(double both_yes, double a_only, double b_only, double both_no);

struct SegmentAgreement {
  long matched = 0;
  long total_a = 0;
  long total_b = 0;
  double percent = 0.0;  // 100 * 2 * matched / (total_a + total_b)
};

/// Per-segment variant: every `label` segment in A is greedily paired with an
/// unused segment in B whose onset lies within tolerance.
SegmentAgreement segment_agreement(const AnnotationSet& a, const AnnotationSet& b,
                                   double tolerance_s, Label label = Label::Empathy);

}  // namespace empathy
