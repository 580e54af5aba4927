#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "empathy/acoustic.hpp"
#include "empathy/balance.hpp"
#include "empathy/corpus.hpp"
#include "empathy/evaluation.hpp"
#include "empathy/features.hpp"
#include "empathy/stats.hpp"
#include "empathy/svm.hpp"
#include "empathy/text.hpp"
#include "empathy/vad.hpp"

namespace empathy {

struct PipelineConfig {
  std::filesystem::path corpus;    // manifest
  std::filesystem::path work_dir = "work";
  std::filesystem::path lexicon;   // LIWC-format dictionary
  std::filesystem::path split_file;  // optional explicit {"train": [ids], "dev": [...], "test": [...]}

  FrameConfig frame;
  VadConfig vad;

  std::string bins = "calibrated:0.18";
  std::size_t per_bin_n = 1;
  std::size_t smote_k = 5;
  double smote_percent = 100.0;

  std::size_t max_ngram = 3;
  std::size_t vocabulary_cap = 10000;

  std::size_t select_batch = 200;
  double select_epsilon = 0.005;
  std::size_t discretize_bins = 10;
  std::size_t relief_samples = 0;  // 0 = every dev instance
  double select_C = 0.01;          // linear SVM used for the learning curves

  std::string c_grid = "1e-5:10";
  std::string g_grid = "1e-5:10";
  double smo_tol = 1e-3;

  double train_ratio = 0.70;
  double dev_ratio = 0.15;
  double test_ratio = 0.15;

  AlignOptions align;
  std::size_t baseline_trials = 1000;
  std::uint64_t seed = 1;

  /// Reads an INI file; unknown keys are rejected. Relative paths are resolved
  /// against the file's directory.
  static PipelineConfig load(const std::filesystem::path& path);
  /// Applies one "section.key" = value override.
  void set(const std::string& key, const std::string& value);
  std::string to_ini() const;
  void validate() const;
};

struct Splits {
  std::vector<std::string> train, dev, test;  // conversation ids, sorted
};

/// Speaker-disjoint split by the configured ratios (or the configured split
/// file). Speakers are shuffled with the pipeline seed and assigned to train,
/// dev and test in turn until each reaches its share of conversations.
Splits split_corpus(const Corpus& corpus, const PipelineConfig& config);
/// Throws ValidationError when a speaker appears in two splits or an id is
/// unknown or repeated.
void validate_splits(const Corpus& corpus, const Splits& splits);
Splits load_splits(const std::filesystem::path& path);
void save_splits(const Splits& splits, const std::filesystem::path& path);

/// A classification unit: one automatic speech span, clipped to [0, t_e] and
/// split at t_i, labeled by the reference segment it falls in.
struct Instance {
  std::string id;  // "<conversation>#<index>"
  std::string conversation_id;
  Span span;
  Label label = Label::Neutral;
};

std::vector<Instance> make_instances(const SegmentPair& pair, const std::vector<Span>& speech,
                                     double min_length_s);

void save_instances(const std::vector<Instance>& instances, const std::filesystem::path& path);
std::vector<Instance> load_instances(const std::filesystem::path& path);

/// Rows follow `instances`; audio is read once per conversation.
FeatureTable acoustic_table(const Corpus& corpus, const std::vector<Instance>& instances,
                            const FrameConfig& config);
std::vector<std::vector<std::string>> instance_tokens(const Corpus& corpus,
                                                      const std::vector<Instance>& instances);
FeatureTable lexical_table(const std::vector<Instance>& instances,
                           const std::vector<std::vector<std::string>>& tokens, const Vocabulary& vocab);
FeatureTable psycho_table(const std::vector<Instance>& instances,
                          const std::vector<std::vector<std::string>>& tokens, const LexiconDict& dict);

/// Appends ceil(percent/100 n) SMOTE rows (ids "smote:<k>", label Empathy,
/// duration of the seed row) to `table`; returns the audit JSON.
std::string oversample(FeatureTable& table, const SmoteConfig& config);

/// Dev UA of a linear SVM on growing prefixes of a feature ranking. The Gram
/// matrix is extended batch by batch while the prefix keeps growing.
class LinearCurveEvaluator {
 public:
  LinearCurveEvaluator(const FeatureTable& train, const FeatureTable& dev, const TrainOptions& options);
  double operator()(std::span<const std::size_t> prefix);

 private:
  TrainOptions options_;
  std::vector<int> y_, y_dev_;
  Eigen::MatrixXd Z_, Zd_, K_;
  std::vector<std::size_t> used_;
};

struct SystemResult {
  std::string name;
  std::string kernel;
  std::size_t input_dim = 0;
  std::size_t selected_dim = 0;
  double C = 0.0;
  double gamma = 0.0;
  double dev_ua = 0.0;
  double test_ua = 0.0;
  WeightedConfusion confusion;
};

struct PipelineReport {
  std::map<std::string, std::size_t> counts;  // conversations, instances per split, ...
  std::vector<double> minority_trajectory;    // train Empathy share: initial, undersampled, oversampled
  std::vector<SystemResult> systems;          // acoustic, lexical, psycho, fused, majority_vote
  double baseline_mean = 0.0;
  double baseline_std = 0.0;
  std::size_t baseline_trials = 0;
  double baseline_prior = 0.0;
  std::map<std::string, McNemarResult> significance;
  std::vector<std::string> warnings;

  const SystemResult& system(const std::string& name) const;
  std::string to_json() const;
  std::string summary() const;
};

/// Runs every stage and writes intermediates plus report.json into the work
/// directory. Stage failures are rethrown as StageError naming the stage.
PipelineReport run_pipeline(const PipelineConfig& config);

}  // namespace empathy
