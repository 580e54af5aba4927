#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "empathy/features.hpp"
#include "empathy/types.hpp"

namespace empathy {

enum class KernelType { Linear, Gaussian };

struct Kernel {
  KernelType type = KernelType::Linear;
  double gamma = 1.0;  // K(x, z) = exp(-gamma |x - z|^2) for Gaussian

  double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                    const Eigen::Ref<const Eigen::RowVectorXd>& z) const;
  std::string name() const;
};

/// Gram matrix of the rows of X.
Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& X, const Kernel& kernel);
/// Kernel values between rows of A (rows of the result) and rows of B.
Eigen::MatrixXd cross_kernel(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Kernel& kernel);

struct SmoConfig {
  double C = 1.0;
  double tol = 1e-3;  // KKT tolerance on y f(x)
  double eps = 1e-12;  // smallest accepted change of a multiplier
  std::size_t max_steps = 2'000'000;
  std::uint64_t seed = 7;
};

struct SmoSolution {
  std::vector<double> alpha;
  double bias = 0.0;  // f(x) = sum_i alpha_i y_i K(x_i, x) + bias
  std::size_t steps = 0;
  bool converged = false;
  double kkt_residual = 0.0;
};

/// Platt's SMO on a precomputed Gram matrix with a full error cache and the
/// max |E1 - E2| second-choice heuristic. y holds +1/-1.
SmoSolution smo_solve(const Eigen::MatrixXd& K, std::span<const int> y, const SmoConfig& config);

/// sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij
double dual_objective(const Eigen::MatrixXd& K, std::span<const int> y, std::span<const double> alpha);

/// Largest violation of the KKT conditions of the soft-margin dual.
double kkt_residual(const Eigen::MatrixXd& K, std::span<const int> y, std::span<const double> alpha,
                    double bias, double C);

struct Decision {
  std::string segment_id;
  Label label = Label::Neutral;
  double margin = 0.0;
};

struct SvmModel {
  Kernel kernel;
  double C = 1.0;
  double bias = 0.0;
  std::string schema_id;
  std::vector<std::string> features;  // input columns used, in model order
  Normalizer normalizer;              // applied to those columns before the kernel
  Eigen::VectorXd weights;            // linear models
  Eigen::MatrixXd support_vectors;    // Gaussian models (normalised)
  Eigen::VectorXd coefficients;       // alpha_i y_i per support vector
  double kkt_residual = 0.0;
  bool converged = true;

  /// Margin for already selected and normalised input rows.
  Eigen::VectorXd decision_values(const Eigen::MatrixXd& Z) const;
  /// Selects the model's columns by name, normalises and scores every row.
  std::vector<Decision> predict(const FeatureTable& table) const;
  Decision predict(const std::string& id, std::span<const double> values) const;

  std::string to_json() const;
  static SvmModel from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static SvmModel load(const std::filesystem::path& path);
};

struct TrainOptions {
  Kernel kernel;
  SmoConfig smo;
  bool normalize = true;  // z-score with statistics of the training rows
  /// Columns whose names start with one of these stay unscaled even when
  /// `normalize` is set (table-based training only).
  std::vector<std::string> raw_prefixes;
};

/// Trains on the given columns of `table` (all when empty).
SvmModel smo_train(const FeatureTable& table, const TrainOptions& options,
                   std::span<const std::size_t> columns = {});
/// Raw-matrix variant; labels are +1/-1.
SvmModel smo_train(const Eigen::MatrixXd& X, std::span<const int> y, const TrainOptions& options);

/// Instance-level unweighted average recall of +1/-1 predictions.
double instance_ua(std::span<const int> predicted, std::span<const int> truth);

struct GridPoint {
  double C = 0.0;
  double gamma = 0.0;
  double score = 0.0;
};

struct GridResult {
  GridPoint best;
  std::vector<GridPoint> points;
};

/// Powers of ten from 1e-5 to 10.
std::vector<double> default_grid();
/// Parses "lo:hi" (powers of ten between the bounds) or a comma list.
std::vector<double> parse_grid(const std::string& text);

/// Dev-set UA for every (C, G); ties go to the smaller C, then smaller G.
/// `gammas` is ignored for linear kernels.
GridResult grid_tune(const FeatureTable& train, const FeatureTable& dev, const TrainOptions& base,
                     std::span<const double> Cs, std::span<const double> gammas,
                     std::span<const std::size_t> columns = {});

/// Majority vote over classifiers. Each inner vector holds one classifier's
/// decisions for the same segments in the same order. A tied vote goes to the
/// label whose voters have the larger mean |margin| (Neutral if still tied);
/// the fused margin carries the winning label's sign and its voters' mean
/// |margin|.
std::vector<Decision> majority_vote(const std::vector<std::vector<Decision>>& decisions);

struct BaselineResult {
  std::vector<double> ua;  // one per trial
  double mean = 0.0;
  double stddev = 0.0;
};

/// Labels drawn i.i.d. with P(Empathy) = `p_positive` for every reference
/// item; UA weighted by `weights` (durations; all 1 when empty).
BaselineResult random_baseline(double p_positive, std::span<const int> truth,
                               std::span<const double> weights, std::uint64_t seed,
                               std::size_t trials);

}  // namespace empathy
