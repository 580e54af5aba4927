#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <json.hpp>

#include "empathy/balance.hpp"
#include "../support/oracles.hpp"

using namespace empathy;

namespace {

Eigen::MatrixXd random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd X(rows, cols);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = n(rng);
  return X;
}

/// Residual of v against the line through x and nn, and the interpolation factor.
std::pair<double, double> colinearity(const Eigen::RowVectorXd& v, const Eigen::RowVectorXd& x,
                                      const Eigen::RowVectorXd& nn) {
  const Eigen::RowVectorXd d = nn - x;
  const double r = d.squaredNorm() > 0 ? (v - x).dot(d) / d.squaredNorm() : 0.0;
  return {(v - x - r * d).norm(), r};
}

}  // namespace

TEST_CASE("quantile bins and bin lookup") {
  std::vector<double> d(100);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<double>(i + 1);
  const auto b = quantile_bins(d, 10);
  CHECK(b.edges.size() == 10);
  CHECK(b.bin_of(1.0) == 0);
  CHECK(b.bin_of(b.edges[0]) == 0);
  CHECK(b.bin_of(std::nextafter(b.edges[0], 1e9)) == 1);
  CHECK(b.bin_of(1e9) == b.edges.size());
  const std::vector<double> ties(50, 3.0);
  CHECK(quantile_bins(ties, 10).edges.size() == 1);
}

TEST_CASE("bin specification parsing") {
  const std::vector<double> d = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(parse_bin_spec("deciles", d, 2, 1).edges.size() == 10);
  CHECK(parse_bin_spec("quantiles:4", d, 2, 1).edges.size() == 4);
  const auto manual = parse_bin_spec("2.5, 7", d, 2, 3);
  CHECK(manual.edges == std::vector<double>{2.5, 7.0});
  CHECK(manual.per_bin_n == 3);
  CHECK_THROWS_AS(parse_bin_spec("7,2.5", d, 2, 1), ValidationError);
  CHECK_THROWS_AS(parse_bin_spec("bogus", d, 2, 1), ValidationError);
  CHECK_THROWS_AS(parse_bin_spec("deciles", d, 2, 0), ValidationError);
}

TEST_CASE("binned undersampling keeps at most N per bin") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.5, 30.0);
  std::vector<double> d(500);
  for (auto& x : d) x = u(rng);
  const auto spec = quantile_bins(d, 10, 3);
  const auto kept = binned_undersample(d, spec, 42);
  CHECK(kept.size() == 30);
  CHECK(std::is_sorted(kept.begin(), kept.end()));
  std::vector<int> per_bin(spec.bin_count(), 0);
  for (auto k : kept) ++per_bin[spec.bin_of(d[k])];
  for (std::size_t b = 0; b < 10; ++b) CHECK(per_bin[b] == 3);
  CHECK(binned_undersample(d, spec, 42) == kept);
  CHECK(binned_undersample(d, spec, 43) != kept);
}

TEST_CASE("calibrated bins reach the target share on the 6% pool") {
  const auto pool = oracle::imbalance_pool(17);
  const auto spec = calibrated_bins(pool.majority, pool.minority.size(), 0.18);
  const auto kept = binned_undersample(pool.majority, spec, 5);
  const double share = 60.0 / (60.0 + static_cast<double>(kept.size()));
  CHECK(std::abs(share - 0.18) <= 0.02);
}

TEST_CASE("SMOTE neighbours and sample count") {
  const auto X = random_matrix(10, 3, 2);
  const auto nn = nearest_neighbors(X, 3);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(nn[i].size() == 3);
    CHECK(std::find(nn[i].begin(), nn[i].end(), i) == nn[i].end());
    // brute-force check of the nearest neighbour
    double best = 1e300;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < 10; ++j)
      if (j != i && (X.row(j) - X.row(i)).squaredNorm() < best) {
        best = (X.row(j) - X.row(i)).squaredNorm();
        arg = j;
      }
    CHECK(nn[i][0] == arg);
  }
  for (double pct : {50.0, 100.0, 250.0}) {
    SmoteConfig c;
    c.percent = pct;
    c.k = 3;
    CHECK(static_cast<double>(smote(X, c).X.rows()) == std::ceil(pct / 100.0 * 10.0));
  }
}

TEST_CASE("every SMOTE sample lies on its seed-neighbour segment") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto X = random_matrix(20, 5, seed);
    SmoteConfig c;
    c.percent = 500.0;
    c.seed = seed;
    const auto r = smote(X, c);
    REQUIRE(static_cast<std::size_t>(r.X.rows()) == r.provenance.size());
    for (std::size_t s = 0; s < r.provenance.size(); ++s) {
      const auto& p = r.provenance[s];
      const auto [residual, t] = colinearity(r.X.row(static_cast<Eigen::Index>(s)), X.row(static_cast<Eigen::Index>(p.seed_index)),
                                             X.row(static_cast<Eigen::Index>(p.neighbor_index)));
      CHECK(residual < 1e-9);
      CHECK(p.r >= 0.0);
      CHECK(p.r <= 1.0);
      CHECK(t == doctest::Approx(p.r).epsilon(1e-9));
      const auto& nb = r.neighbors[p.seed_index];
      CHECK(std::find(nb.begin(), nb.end(), p.neighbor_index) != nb.end());
    }
  }
}

TEST_CASE("SMOTE needs more minority rows than k") {
  SmoteConfig c;
  c.k = 5;
  CHECK_THROWS_AS(smote(random_matrix(5, 2, 4), c), ValidationError);
  CHECK(smote(random_matrix(6, 2, 4), c).X.rows() == 6);
  c.percent = 0.0;
  CHECK(smote(random_matrix(2, 2, 4), c).X.rows() == 0);
}

TEST_CASE("SMOTE audit records the recipe") {
  const auto X = random_matrix(4, 2, 8);
  SmoteConfig c;
  c.k = 2;
  const std::vector<std::string> ids = {"a", "b", "c", "d"};
  const auto audit = nlohmann::json::parse(smote_audit_json(smote(X, c), c, ids));
  CHECK(audit["k"] == 2);
  CHECK(audit["samples"].size() == 4);
  CHECK(ids.end() != std::find(ids.begin(), ids.end(), audit["samples"][0]["seed_id"].get<std::string>()));
}

TEST_CASE("invalid SMOTE configuration") {
  SmoteConfig c;
  c.k = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.percent = -5;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}
