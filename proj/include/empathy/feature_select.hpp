#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "empathy/features.hpp"

namespace empathy {

/// Equal-frequency bins of one column. `boundaries` holds the largest value of
/// each bin; a value falls in the bin given by the number of boundaries below
/// it, capped at the last bin.
struct Discretization {
  std::vector<double> boundaries;
  bool reduced = false;  // fewer bins than requested (ties or few distinct values)

  std::size_t bins() const { return boundaries.size(); }
  int bin(double value) const;
};

/// Cuts the sorted column near every multiple of n/k, moving each cut to the
/// closest change of value so equal values always share a bin.
Discretization equal_freq_discretize(std::span<const double> column, std::size_t k = 10);

/// Row-major matrix of bin ids.
struct DiscreteMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint16_t> data;

  std::uint16_t operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

std::vector<Discretization> fit_discretizers(const Eigen::MatrixXd& X, std::size_t k = 10);
DiscreteMatrix discretize(const Eigen::MatrixXd& X, const std::vector<Discretization>& columns);

struct ReliefWeights {
  std::vector<double> weights;
  std::vector<std::size_t> ranking;  // by weight descending, ties by column
};

/// Single-neighbour Relief on discretized data: nearest hit and miss by
/// Manhattan distance over bin ids (ties to the lowest row), 0/1 value
/// difference per feature. With `sample_m` = 0 or >= rows every row is used in
/// order; otherwise `sample_m` distinct rows are drawn with `seed`. A row whose
/// class has no other member contributes no hit term.
ReliefWeights relief_weights(const DiscreteMatrix& X, std::span<const int> y,
                             std::size_t sample_m = 0, std::uint64_t seed = 1);

std::vector<std::size_t> rank_by_weight(std::span<const double> weights);

struct LearningCurve {
  std::vector<std::size_t> sizes;
  std::vector<double> scores;
  std::size_t selected_k = 0;
  std::vector<std::size_t> selected;  // leading prefix of the ranking
  std::vector<std::string> warnings;
};

/// Evaluates prefixes of `ranking` in steps of `batch` (the last step is the
/// full ranking) and stops at the first step whose score improves on the
/// previous one by less than `epsilon`, keeping the previous prefix.
/// `dev_labels` is only inspected to warn about small dev sets.
LearningCurve learning_curve_select(
    std::span<const std::size_t> ranking, std::size_t batch, double epsilon,
    const std::function<double(std::span<const std::size_t>)>& evaluate,
    std::span<const int> dev_labels = {});

void write_learning_curve_csv(const LearningCurve& curve, std::ostream& out);

/// Row-wise concatenation of acoustic (first) and lexical columns. Rows must
/// refer to the same instances in the same order.
FeatureTable fuse(const FeatureTable& acoustic, const FeatureTable& lexical);
FeatureVector fuse(const FeatureVector& acoustic, const FeatureVector& lexical,
                   const SchemaPtr& fused_schema);
SchemaPtr fused_schema(const FeatureSchema& acoustic, const FeatureSchema& lexical);

}  // namespace empathy
