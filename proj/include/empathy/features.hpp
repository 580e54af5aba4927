#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "empathy/types.hpp"

namespace empathy {

/// Ordered feature names shared by every vector of one feature set.
struct FeatureSchema {
  std::string id;
  std::vector<std::string> names;

  std::size_t size() const { return names.size(); }
};

using SchemaPtr = std::shared_ptr<const FeatureSchema>;

struct FeatureVector {
  SchemaPtr schema;
  std::vector<double> values;
};

/// Row-per-instance feature matrix with instance metadata.
struct FeatureTable {
  SchemaPtr schema;
  std::vector<std::string> ids;
  std::vector<Label> labels;
  std::vector<double> durations;
  Eigen::MatrixXd X;

  std::size_t rows() const { return ids.size(); }
  std::size_t cols() const { return schema ? schema->size() : 0; }

  void append(const std::string& id, Label label, double duration, std::span<const double> values);
  FeatureTable subset(std::span<const std::size_t> rows) const;
  FeatureTable select_columns(std::span<const std::size_t> columns) const;
};

/// +1 for Empathy, -1 otherwise.
std::vector<int> binary_targets(const FeatureTable& table);

/// Vertical concatenation; schemas must match.
FeatureTable concat_rows(const FeatureTable& a, const FeatureTable& b);

/// CSV with header `segment_id,label,duration_s,<names...>`.
void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable read_feature_csv(const std::filesystem::path& path, const std::string& schema_id = "");

/// Sparse text format: one instance per line,
/// `segment_id<TAB>label<TAB>duration_s<TAB>index:value ...` with 0-based
/// indices; the first line is `#schema <id> <dim>` and the second lists the
/// names tab-separated.
void write_sparse(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable read_sparse(const std::filesystem::path& path);

/// Dispatches on extension: `.svec` is sparse, anything else CSV.
FeatureTable read_features(const std::filesystem::path& path);
void write_features(const FeatureTable& table, const std::filesystem::path& path);

/// Per-column z-score parameters estimated on a training split.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1/std, or 1 for constant columns

  static Normalizer fit(const Eigen::MatrixXd& X);
  static Normalizer identity(std::size_t dim);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
  bool empty() const { return mean.empty(); }
};

}  // namespace empathy
