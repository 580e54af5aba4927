#include "empathy/balance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "empathy/functionals.hpp"
#include "empathy/random.hpp"
#include "empathy/types.hpp"

namespace empathy {

std::size_t BinSpec::bin_of(double duration) const {
  return static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), duration) -
                                  edges.begin());
}

void BinSpec::validate() const {
  if (per_bin_n < 1) throw ValidationError("per-bin count must be at least 1");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw ValidationError("bin edges must be strictly ascending");
}

BinSpec quantile_bins(std::span<const double> durations, std::size_t n_bins, std::size_t per_bin_n) {
  if (n_bins == 0) throw ValidationError("need at least one bin");
  BinSpec spec;
  spec.per_bin_n = per_bin_n;
  if (durations.empty()) return spec;
  std::vector<double> sorted(durations.begin(), durations.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t j = 1; j <= n_bins; ++j) {
    const double e = percentile(sorted, static_cast<double>(j) / static_cast<double>(n_bins));
    if (spec.edges.empty() || e > spec.edges.back()) spec.edges.push_back(e);
  }
  return spec;
}

BinSpec calibrated_bins(std::span<const double> majority_durations, std::size_t n_minority,
                        double target_minority_fraction, std::size_t per_bin_n) {
  if (!(target_minority_fraction > 0.0 && target_minority_fraction < 1.0))
    throw ValidationError("target minority fraction must be in (0, 1)");
  const double keep = static_cast<double>(n_minority) * (1.0 - target_minority_fraction) /
                      target_minority_fraction;
  const std::size_t n = std::max<std::size_t>(majority_durations.size(), 1);
  // tied durations merge quantile edges, so search the bin count whose
  // deduplicated bins keep the number of segments closest to the target
  auto kept = [&](std::size_t bins) {
    const BinSpec spec = quantile_bins(majority_durations, bins, per_bin_n);
    std::vector<std::size_t> sizes(spec.bin_count(), 0);
    for (double d : majority_durations) ++sizes[spec.bin_of(d)];
    double total = 0.0;
    for (auto s : sizes) total += static_cast<double>(std::min(s, per_bin_n));
    return total;
  };
  std::size_t lo = 1, hi = n;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (kept(mid) >= keep) hi = mid;
    else lo = mid + 1;
  }
  std::size_t bins = lo;
  if (bins > 1 && std::abs(kept(bins - 1) - keep) <= std::abs(kept(bins) - keep)) --bins;
  return quantile_bins(majority_durations, bins, per_bin_n);
}

BinSpec parse_bin_spec(const std::string& text, std::span<const double> majority_durations,
                       std::size_t n_minority, std::size_t per_bin_n) {
  BinSpec spec;
  try {
    if (text == "deciles") {
      spec = quantile_bins(majority_durations, 10, per_bin_n);
    } else if (text.rfind("quantiles:", 0) == 0) {
      spec = quantile_bins(majority_durations, std::stoul(text.substr(10)), per_bin_n);
    } else if (text.rfind("calibrated:", 0) == 0) {
      spec = calibrated_bins(majority_durations, n_minority, std::stod(text.substr(11)), per_bin_n);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) spec.edges.push_back(std::stod(item));
      spec.per_bin_n = per_bin_n;
    }
  } catch (const std::logic_error&) {
    throw ValidationError("cannot parse bin specification '" + text + "'");
  }
  spec.validate();
  return spec;
}

std::vector<std::size_t> binned_undersample(std::span<const double> durations, const BinSpec& spec,
                                            std::uint64_t seed) {
  spec.validate();
  std::vector<std::vector<std::size_t>> bins(spec.bin_count());
  for (std::size_t i = 0; i < durations.size(); ++i) bins[spec.bin_of(durations[i])].push_back(i);
  Rng rng(seed);
  std::vector<std::size_t> out;
  for (auto& bin : bins) {
    const std::size_t take = std::min(spec.per_bin_n, bin.size());
    for (std::size_t i = 0; i < take; ++i) {
      const auto j = i + uniform_index(rng, bin.size() - i);
      std::swap(bin[i], bin[j]);
      out.push_back(bin[i]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void SmoteConfig::validate() const {
  if (k < 1) throw ValidationError("SMOTE k must be at least 1");
  if (!(percent >= 0.0)) throw ValidationError("SMOTE percent must be non-negative");
}

std::vector<std::vector<std::size_t>> nearest_neighbors(const Eigen::MatrixXd& X, std::size_t k) {
  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i)
        dist.emplace_back(
            (X.row(static_cast<Eigen::Index>(i)) - X.row(static_cast<Eigen::Index>(j))).squaredNorm(), j);
    const std::size_t kk = std::min(k, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
    for (std::size_t m = 0; m < kk; ++m) out[i].push_back(dist[m].second);
  }
  return out;
}

SmoteResult smote(const Eigen::MatrixXd& minority, const SmoteConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(minority.rows());
  SmoteResult result;
  const auto count = static_cast<std::size_t>(std::ceil(config.percent / 100.0 * static_cast<double>(n) - 1e-9));
  result.X.resize(static_cast<Eigen::Index>(count), minority.cols());
  if (count == 0) return result;
  if (n <= config.k)
    throw ValidationError("SMOTE needs more than k=" + std::to_string(config.k) +
                          " minority samples (at least " + std::to_string(config.k + 1) + "), got " +
                          std::to_string(n));
  result.neighbors = nearest_neighbors(minority, config.k);

  Rng rng(config.seed);
  std::vector<std::size_t> seeds;
  seeds.reserve(count);
  for (std::size_t pass = 0; pass < count / n; ++pass)
    for (std::size_t i = 0; i < n; ++i) seeds.push_back(i);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < count % n; ++i) {
    const auto j = i + uniform_index(rng, n - i);
    std::swap(order[i], order[j]);
    seeds.push_back(order[i]);
  }

  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t x = seeds[s];
    const auto& nn = result.neighbors[x];
    const std::size_t neighbor = nn[uniform_index(rng, nn.size())];
    const double r = uniform_closed01(rng);
    const auto xi = static_cast<Eigen::Index>(x);
    result.X.row(static_cast<Eigen::Index>(s)) =
        minority.row(xi) + r * (minority.row(static_cast<Eigen::Index>(neighbor)) - minority.row(xi));
    result.provenance.push_back({x, neighbor, r});
  }
  return result;
}

std::string smote_audit_json(const SmoteResult& result, const SmoteConfig& config,
                             std::span<const std::string> minority_ids) {
  nlohmann::json j;
  j["k"] = config.k;
  j["percent"] = config.percent;
  j["seed"] = config.seed;
  auto& samples = j["samples"] = nlohmann::json::array();
  for (const auto& p : result.provenance) {
    nlohmann::json s = {{"seed_index", p.seed_index}, {"neighbor_index", p.neighbor_index}, {"r", p.r}};
    if (p.seed_index < minority_ids.size()) {
      s["seed_id"] = minority_ids[p.seed_index];
      s["neighbor_id"] = minority_ids[p.neighbor_index];
    }
    samples.push_back(std::move(s));
  }
  return j.dump(1);
}

}  // namespace empathy
