#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "empathy/features.hpp"

using namespace empathy;
namespace fs = std::filesystem;

namespace {

FeatureTable sample_table() {
  auto s = std::make_shared<FeatureSchema>();
  s->id = "demo";
  s->names = {"a", "b c", "d"};
  FeatureTable t;
  t.schema = s;
  t.append("x#0001", Label::Neutral, 1.25, std::vector<double>{0.1, 0.0, -3e-12});
  t.append("x#0002", Label::Empathy, 2.5, std::vector<double>{1.0 / 3.0, 0.0, 12345.678901234});
  t.append("y#0001", Label::Neutral, 0.75, std::vector<double>{0.0, 0.0, 0.0});
  return t;
}

}  // namespace

TEST_CASE("CSV and sparse formats round trip to nine digits") {
  const auto t = sample_table();
  const auto dir = fs::temp_directory_path() / "empathy_unit_features";
  fs::create_directories(dir);
  for (const char* name : {"t.csv", "t.svec"}) {
    CAPTURE(name);
    write_features(t, dir / name);
    const auto back = read_features(dir / name);
    CHECK(back.ids == t.ids);
    CHECK(back.labels == t.labels);
    CHECK(back.durations == t.durations);
    CHECK(back.schema->names == t.schema->names);
    for (Eigen::Index i = 0; i < t.X.rows(); ++i)
      for (Eigen::Index j = 0; j < t.X.cols(); ++j)
        CHECK(std::abs(back.X(i, j) - t.X(i, j)) <= 5e-9 * std::abs(t.X(i, j)));
    // values already at file precision are written and read back unchanged
    write_features(back, dir / (std::string("again_") + name));
    CHECK(read_features(dir / (std::string("again_") + name)).X == back.X);
  }
}

TEST_CASE("malformed feature files") {
  const auto dir = fs::temp_directory_path() / "empathy_unit_features_bad";
  fs::create_directories(dir);
  std::ofstream(dir / "bad.csv") << "segment_id,label,duration_s,a\nx,Neutral,1.0,abc\n";
  CHECK_THROWS_AS(read_features(dir / "bad.csv"), ValidationError);
  std::ofstream(dir / "short.csv") << "segment_id,label,duration_s,a,b\nx,Neutral,1.0,1\n";
  CHECK_THROWS_AS(read_features(dir / "short.csv"), ValidationError);
  CHECK_THROWS_AS(read_features(dir / "missing.csv"), ValidationError);
}

TEST_CASE("subset, column selection and concatenation") {
  const auto t = sample_table();
  const std::vector<std::size_t> rows = {2, 0};
  const auto s = t.subset(rows);
  CHECK(s.ids == std::vector<std::string>{"y#0001", "x#0001"});
  const std::vector<std::size_t> cols = {2};
  const auto c = t.select_columns(cols);
  CHECK(c.cols() == 1);
  CHECK(c.X(1, 0) == t.X(1, 2));
  const auto both = concat_rows(t, s);
  CHECK(both.rows() == 5);
  CHECK(binary_targets(both) == std::vector<int>{-1, 1, -1, -1, -1});
  CHECK_THROWS_AS(concat_rows(t, c), ValidationError);
  std::vector<double> wrong = {1.0};
  auto copy = t;
  CHECK_THROWS_AS(copy.append("z", Label::Neutral, 1.0, wrong), ValidationError);
}

TEST_CASE("normalizer z-scores and leaves constant columns centred") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(3.0, 2.0);
  Eigen::MatrixXd X(50, 3);
  for (Eigen::Index i = 0; i < 50; ++i) X.row(i) << n(rng), 7.0, n(rng) * 100.0;
  const auto norm = Normalizer::fit(X);
  const auto Z = norm.apply(X);
  for (Eigen::Index j : {0, 2}) {
    CHECK(Z.col(j).mean() == doctest::Approx(0.0).epsilon(1e-12));
    const double var = (Z.col(j).array() - Z.col(j).mean()).square().sum() / 49.0;
    CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(0.03));
  }
  CHECK(Z.col(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(Normalizer::identity(3).apply(X) == X);
}
