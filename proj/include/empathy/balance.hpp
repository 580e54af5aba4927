#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace empathy {

/// Duration bins for undersampling. Bin b holds durations in
/// (edges[b-1], edges[b]]; durations above the last edge go to an extra
/// overflow bin.
struct BinSpec {
  std::vector<double> edges;
  std::size_t per_bin_n = 1;

  std::size_t bin_count() const { return edges.size() + 1; }
  std::size_t bin_of(double duration) const;
  void validate() const;
};

/// Edges at the j/n_bins quantiles (j = 1..n_bins) of `durations`, duplicates
/// removed, so every bin is non-empty on the data the edges came from.
BinSpec quantile_bins(std::span<const double> durations, std::size_t n_bins,
                      std::size_t per_bin_n = 1);

/// Quantile bins whose count makes the kept majority reach
/// `target_minority_fraction` of the balanced set.
BinSpec calibrated_bins(std::span<const double> majority_durations, std::size_t n_minority,
                        double target_minority_fraction, std::size_t per_bin_n = 1);

/// Parses "deciles", "quantiles:K", "calibrated:F" (needs the minority count)
/// or a comma-separated list of edges.
BinSpec parse_bin_spec(const std::string& text, std::span<const double> majority_durations,
                       std::size_t n_minority, std::size_t per_bin_n);

/// Indices (ascending) of min(N, bin size) randomly chosen segments per bin.
std::vector<std::size_t> binned_undersample(std::span<const double> durations, const BinSpec& spec,
                                            std::uint64_t seed);

struct SmoteConfig {
  std::size_t k = 5;
  double percent = 100.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SmoteProvenance {
  std::size_t seed_index = 0;
  std::size_t neighbor_index = 0;
  double r = 0.0;
};

struct SmoteResult {
  Eigen::MatrixXd X;  // one synthetic vector per row
  std::vector<SmoteProvenance> provenance;
  std::vector<std::vector<std::size_t>> neighbors;  // k nearest per minority row
};

/// k nearest Euclidean neighbours of each row among the other rows; ties go
/// to the lower index.
std::vector<std::vector<std::size_t>> nearest_neighbors(const Eigen::MatrixXd& X, std::size_t k);

/// ceil(percent/100 * n) synthetic samples x + r (nn - x). Whole multiples of
/// n use every minority row as seed in turn; the remainder uses distinct
/// randomly chosen seeds.
SmoteResult smote(const Eigen::MatrixXd& minority, const SmoteConfig& config);

std::string smote_audit_json(const SmoteResult& result, const SmoteConfig& config,
                             std::span<const std::string> minority_ids = {});

}  // namespace empathy
