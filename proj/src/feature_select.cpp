#include "empathy/feature_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "empathy/random.hpp"

namespace empathy {

int Discretization::bin(double value) const {
  if (boundaries.empty()) return 0;
  const auto below = std::lower_bound(boundaries.begin(), boundaries.end(), value) - boundaries.begin();
  return static_cast<int>(std::min<std::ptrdiff_t>(below, static_cast<std::ptrdiff_t>(boundaries.size()) - 1));
}

Discretization equal_freq_discretize(std::span<const double> column, std::size_t k) {
  if (column.empty()) throw ValidationError("cannot discretize an empty column");
  if (k == 0) throw ValidationError("need at least one bin");
  std::vector<double> v(column.begin(), column.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  // change[p] is true when a cut before position p separates different values
  auto is_change = [&](std::size_t p) { return p > 0 && p < n && v[p - 1] < v[p]; };

  Discretization d;
  std::size_t last_cut = 0;
  for (std::size_t j = 1; j < k; ++j) {
    const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(j * n) / static_cast<double>(k)));
    std::size_t lo = std::min(target, n), hi = std::max<std::size_t>(target, 1);
    while (lo > last_cut && !is_change(lo)) --lo;
    while (hi < n && !is_change(hi)) ++hi;
    const bool lo_ok = lo > last_cut && is_change(lo);
    const bool hi_ok = hi < n && hi > last_cut && is_change(hi);
    std::size_t cut = 0;
    if (lo_ok && hi_ok)
      cut = (target - lo <= hi - target) ? lo : hi;
    else if (lo_ok)
      cut = lo;
    else if (hi_ok)
      cut = hi;
    else
      continue;
    d.boundaries.push_back(v[cut - 1]);
    last_cut = cut;
  }
  if (d.boundaries.empty() || v.back() > d.boundaries.back()) d.boundaries.push_back(v.back());
  d.reduced = d.boundaries.size() < k;
  return d;
}

std::vector<Discretization> fit_discretizers(const Eigen::MatrixXd& X, std::size_t k) {
  std::vector<Discretization> out;
  out.reserve(static_cast<std::size_t>(X.cols()));
  std::vector<double> col(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) col[static_cast<std::size_t>(i)] = X(i, j);
    out.push_back(equal_freq_discretize(col, k));
  }
  return out;
}

DiscreteMatrix discretize(const Eigen::MatrixXd& X, const std::vector<Discretization>& columns) {
  if (columns.size() != static_cast<std::size_t>(X.cols()))
    throw ValidationError("discretizer count does not match the column count");
  DiscreteMatrix m;
  m.rows = static_cast<std::size_t>(X.rows());
  m.cols = columns.size();
  m.data.resize(m.rows * m.cols);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j)
      m.data[i * m.cols + j] = static_cast<std::uint16_t>(
          columns[j].bin(X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
  return m;
}

std::vector<std::size_t> rank_by_weight(std::span<const double> weights) {
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  return order;
}

ReliefWeights relief_weights(const DiscreteMatrix& X, std::span<const int> y, std::size_t sample_m,
                             std::uint64_t seed) {
  const std::size_t n = X.rows, d = X.cols;
  if (y.size() != n) throw ValidationError("label count does not match the row count");
  if (n == 0) throw ValidationError("Relief needs at least one instance");
  const int first = y[0];
  if (std::all_of(y.begin(), y.end(), [&](int v) { return v == first; }))
    throw ValidationError("Relief needs instances of both classes");

  std::vector<std::size_t> sample(n);
  std::iota(sample.begin(), sample.end(), 0);
  if (sample_m > 0 && sample_m < n) {
    Rng rng(seed);
    for (std::size_t i = 0; i < sample_m; ++i)
      std::swap(sample[i], sample[i + uniform_index(rng, n - i)]);
    sample.resize(sample_m);
  }
  const double m = static_cast<double>(sample.size());

  auto distance = [&](std::size_t a, std::size_t b) {
    const std::uint16_t* ra = &X.data[a * d];
    const std::uint16_t* rb = &X.data[b * d];
    long s = 0;
    for (std::size_t j = 0; j < d; ++j) s += std::abs(static_cast<int>(ra[j]) - static_cast<int>(rb[j]));
    return s;
  };

  std::vector<long> acc(d, 0);  // sum of miss diffs minus hit diffs, scaled later
  for (std::size_t x : sample) {
    long best_hit = std::numeric_limits<long>::max(), best_miss = best_hit;
    std::size_t hit = n, miss = n;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == x) continue;
      const long dist = distance(x, r);
      if (y[r] == y[x]) {
        if (dist < best_hit) best_hit = dist, hit = r;
      } else if (dist < best_miss) {
        best_miss = dist, miss = r;
      }
    }
    const std::uint16_t* rx = &X.data[x * d];
    if (miss < n) {
      const std::uint16_t* rm = &X.data[miss * d];
      for (std::size_t j = 0; j < d; ++j) acc[j] += rx[j] != rm[j];
    }
    if (hit < n) {
      const std::uint16_t* rh = &X.data[hit * d];
      for (std::size_t j = 0; j < d; ++j) acc[j] -= rx[j] != rh[j];
    }
  }
  ReliefWeights w;
  w.weights.resize(d);
  for (std::size_t j = 0; j < d; ++j) w.weights[j] = static_cast<double>(acc[j]) / m;
  w.ranking = rank_by_weight(w.weights);
  return w;
}

LearningCurve learning_curve_select(
    std::span<const std::size_t> ranking, std::size_t batch, double epsilon,
    const std::function<double(std::span<const std::size_t>)>& evaluate,
    std::span<const int> dev_labels) {
  if (ranking.empty()) throw ValidationError("learning curve needs a non-empty ranking");
  if (batch == 0) throw ValidationError("batch size must be positive");
  LearningCurve curve;
  if (!dev_labels.empty()) {
    const auto pos = std::count(dev_labels.begin(), dev_labels.end(), 1);
    const auto neg = static_cast<long>(dev_labels.size()) - pos;
    if (pos < 10 || neg < 10)
      curve.warnings.push_back("dev set has fewer than 10 instances in a class (" +
                               std::to_string(pos) + " positive, " + std::to_string(neg) +
                               " negative); the learning curve may be unstable");
  }
  const std::size_t total = ranking.size();
  std::size_t chosen = 0;
  for (std::size_t k = std::min(batch, total);; k = std::min(k + batch, total)) {
    const double score = evaluate(ranking.first(k));
    if (!curve.scores.empty() && score - curve.scores.back() < epsilon) {
      curve.sizes.push_back(k);
      curve.scores.push_back(score);
      chosen = curve.sizes[curve.sizes.size() - 2];
      break;
    }
    curve.sizes.push_back(k);
    curve.scores.push_back(score);
    chosen = k;
    if (k == total) break;
  }
  curve.selected_k = chosen;
  curve.selected.assign(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(chosen));
  return curve;
}

void write_learning_curve_csv(const LearningCurve& curve, std::ostream& out) {
  out << "n_features,score,selected\n";
  for (std::size_t i = 0; i < curve.sizes.size(); ++i)
    out << curve.sizes[i] << ',' << curve.scores[i] << ',' << (curve.sizes[i] == curve.selected_k ? 1 : 0)
        << '\n';
}

SchemaPtr fused_schema(const FeatureSchema& acoustic, const FeatureSchema& lexical) {
  auto s = std::make_shared<FeatureSchema>();
  s->id = "fused";
  s->names = acoustic.names;
  s->names.insert(s->names.end(), lexical.names.begin(), lexical.names.end());
  return s;
}

FeatureTable fuse(const FeatureTable& acoustic, const FeatureTable& lexical) {
  if (acoustic.ids != lexical.ids)
    throw ValidationError("fusion needs the same instances in the same order in both tables");
  FeatureTable out;
  out.schema = fused_schema(*acoustic.schema, *lexical.schema);
  out.ids = acoustic.ids;
  out.labels = acoustic.labels;
  out.durations = acoustic.durations;
  out.X.resize(acoustic.X.rows(), acoustic.X.cols() + lexical.X.cols());
  out.X << acoustic.X, lexical.X;
  return out;
}

FeatureVector fuse(const FeatureVector& acoustic, const FeatureVector& lexical,
                   const SchemaPtr& schema) {
  if (!acoustic.schema || acoustic.values.size() != acoustic.schema->size() || !lexical.schema ||
      lexical.values.size() != lexical.schema->size())
    throw ValidationError("feature vector does not match its schema");
  if (!schema || schema->size() != acoustic.values.size() + lexical.values.size())
    throw ValidationError("fused schema of size " + std::to_string(schema ? schema->size() : 0) +
                          " does not match " + std::to_string(acoustic.values.size()) + " + " +
                          std::to_string(lexical.values.size()));
  FeatureVector out{schema, acoustic.values};
  out.values.insert(out.values.end(), lexical.values.begin(), lexical.values.end());
  return out;
}

}  // namespace empathy
