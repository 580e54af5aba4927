#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "empathy/svm.hpp"

using namespace empathy;

namespace {

FeatureTable table(const Eigen::MatrixXd& X, const std::vector<int>& y) {
  auto s = std::make_shared<FeatureSchema>();
  s->id = "t";
  for (Eigen::Index j = 0; j < X.cols(); ++j) s->names.push_back("x" + std::to_string(j));
  FeatureTable t;
  t.schema = s;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Eigen::RowVectorXd r = X.row(i);
    t.append("r" + std::to_string(i), y[static_cast<std::size_t>(i)] > 0 ? Label::Empathy : Label::Neutral, 1.0,
             std::vector<double>(r.data(), r.data() + r.size()));
  }
  return t;
}

/// Two Gaussian blobs `gap` apart along the first axis.
std::pair<Eigen::MatrixXd, std::vector<int>> blobs(std::size_t n, std::size_t dim, double gap, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 3 == 0 ? 1 : -1;
    for (std::size_t j = 0; j < dim; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g(rng);
    X(static_cast<Eigen::Index>(i), 0) += 0.5 * gap * y[i];
  }
  return {X, y};
}

}  // namespace

TEST_CASE("two-point maximum margin solution") {
  Eigen::MatrixXd X(2, 1);
  X << 0.0, 2.0;
  const std::vector<int> y = {-1, 1};
  TrainOptions o;
  o.normalize = false;
  o.smo.C = 1e6;
  const auto m = smo_train(X, y, o);
  REQUIRE(m.weights.size() == 1);
  CHECK(std::abs(m.weights(0) - 1.0) < 1e-3);
  CHECK(std::abs(m.bias + 1.0) < 1e-3);
  CHECK(m.kkt_residual < 1e-3);
}

TEST_CASE("Gaussian kernel separates XOR") {
  Eigen::MatrixXd X(4, 2);
  X << 0, 0, 1, 1, 0, 1, 1, 0;
  const std::vector<int> y = {-1, -1, 1, 1};
  TrainOptions o;
  o.normalize = false;
  o.kernel.type = KernelType::Gaussian;
  o.kernel.gamma = 1.0;
  o.smo.C = 1e3;
  const auto m = smo_train(X, y, o);
  const auto f = m.decision_values(X);
  for (int i = 0; i < 4; ++i) CHECK(f(i) * y[static_cast<std::size_t>(i)] > 0.0);
  CHECK(m.kkt_residual < 1e-3);
}

TEST_CASE("SMO solutions satisfy KKT and the box constraints") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto [X, y] = blobs(60, 4, 1.5, seed);
    for (auto type : {KernelType::Linear, KernelType::Gaussian}) {
      Kernel k;
      k.type = type;
      k.gamma = 0.3;
      const auto K = gram_matrix(X, k);
      SmoConfig c;
      c.C = 0.5;
      const auto s = smo_solve(K, y, c);
      CHECK(s.converged);
      CHECK(s.kkt_residual < 1e-3);
      CHECK(kkt_residual(K, y, s.alpha, s.bias, c.C) == doctest::Approx(s.kkt_residual));
      double balance = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK(s.alpha[i] >= 0.0);
        CHECK(s.alpha[i] <= c.C + 1e-12);
        balance += s.alpha[i] * y[i];
      }
      CHECK(std::abs(balance) < 1e-9);
      CHECK(dual_objective(K, y, s.alpha) > 0.0);
    }
  }
}

TEST_CASE("kernel helpers agree") {
  auto [X, y] = blobs(10, 3, 1.0, 3);
  Kernel k;
  k.type = KernelType::Gaussian;
  k.gamma = 0.7;
  const auto K = gram_matrix(X, k);
  const auto C = cross_kernel(X, X, k);
  CHECK((K - C).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(K(2, 5) == doctest::Approx(std::exp(-0.7 * (X.row(2) - X.row(5)).squaredNorm())));
  CHECK(K(4, 4) == doctest::Approx(1.0));
}

TEST_CASE("model save, load and prediction by column name") {
  auto [X, y] = blobs(40, 3, 4.0, 5);
  const auto t = table(X, y);
  TrainOptions o;
  o.smo.C = 1.0;
  const std::vector<std::size_t> cols = {0, 2};
  const auto m = smo_train(t, o, cols);
  CHECK(m.features == std::vector<std::string>{"x0", "x2"});
  const auto path = std::filesystem::temp_directory_path() / "empathy_unit_model.json";
  m.save(path);
  const auto back = SvmModel::load(path);
  const auto a = m.predict(t), b = back.predict(t);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].margin == b[i].margin);
    CHECK(a[i].segment_id == t.ids[i]);
  }
  auto missing = t.select_columns(std::vector<std::size_t>{0, 1});
  CHECK_THROWS_AS(m.predict(missing), ValidationError);
}

TEST_CASE("Gaussian model round trip") {
  auto [X, y] = blobs(30, 2, 3.0, 6);
  TrainOptions o;
  o.kernel.type = KernelType::Gaussian;
  o.kernel.gamma = 0.5;
  const auto m = smo_train(table(X, y), o);
  const auto back = SvmModel::from_json(m.to_json());
  const auto t = table(X, y);
  const auto a = m.predict(t), b = back.predict(t);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].margin == b[i].margin);
}

TEST_CASE("grid search finds a perfect C on separable data") {
  auto [X, y] = blobs(60, 2, 8.0, 7);
  auto [Xd, yd] = blobs(30, 2, 8.0, 8);
  TrainOptions o;
  const auto g = grid_tune(table(X, y), table(Xd, yd), o, default_grid(), {});
  CHECK(g.best.score == 1.0);
  CHECK(g.points.size() == default_grid().size());
  o.kernel.type = KernelType::Gaussian;
  const auto gg = grid_tune(table(X, y), table(Xd, yd), o, default_grid(), default_grid());
  CHECK(gg.points.size() == 49);
  CHECK(gg.best.score == 1.0);
}

TEST_CASE("grid parsing") {
  CHECK(parse_grid("1e-2:1") == std::vector<double>{0.01, 0.1, 1.0});
  CHECK(parse_grid("0.5, 2") == std::vector<double>{0.5, 2.0});
  CHECK(default_grid().size() == 7);
  CHECK_THROWS_AS(parse_grid("x"), ValidationError);
}

TEST_CASE("instance UA") {
  const std::vector<int> t = {1, 1, -1, -1, -1}, p = {1, -1, -1, -1, 1};
  CHECK(instance_ua(p, t) == doctest::Approx(0.5 * (0.5 + 2.0 / 3.0)));
}

TEST_CASE("majority vote with margin tie-break") {
  using L = Label;
  auto d = [](L l, double m) { return Decision{"s", l, m}; };
  const std::vector<std::vector<Decision>> two_vs_one = {{d(L::Empathy, 0.2)}, {d(L::Empathy, 0.1)}, {d(L::Neutral, -3.0)}};
  CHECK(majority_vote(two_vs_one)[0].label == L::Empathy);
  CHECK(majority_vote(two_vs_one)[0].margin == doctest::Approx(0.15));
  const std::vector<std::vector<Decision>> tie = {{d(L::Empathy, 0.2)}, {d(L::Neutral, -0.5)}};
  CHECK(majority_vote(tie)[0].label == L::Neutral);
  CHECK(majority_vote(tie)[0].margin == doctest::Approx(-0.5));
  const std::vector<std::vector<Decision>> even = {{d(L::Empathy, 0.5)}, {d(L::Neutral, -0.5)}};
  CHECK(majority_vote(even)[0].label == L::Neutral);
  const std::vector<std::vector<Decision>> mismatch = {{d(L::Empathy, 0.5)}, {Decision{"t", L::Neutral, -1}}};
  CHECK_THROWS_AS(majority_vote(mismatch), ValidationError);
}

TEST_CASE("random baseline sits at 0.5") {
  std::vector<int> truth(400);
  for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = i % 2 ? 1 : -1;
  const auto r = random_baseline(0.5, truth, {}, 3, 1000);
  CHECK(r.ua.size() == 1000);
  CHECK(std::abs(r.mean - 0.5) <= 0.02);
  CHECK(r.stddev > 0.0);
  const auto again = random_baseline(0.5, truth, {}, 3, 1000);
  CHECK(again.mean == r.mean);
  std::vector<double> w(truth.size(), 2.0);
  CHECK(std::abs(random_baseline(0.2, truth, w, 4, 1000).mean - 0.5) <= 0.02);
  CHECK_THROWS_AS(random_baseline(1.5, truth, {}, 1, 10), ValidationError);
}
