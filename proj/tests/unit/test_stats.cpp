#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "empathy/stats.hpp"

using namespace empathy;

// Reference p-values frozen from scipy.stats (ttest_ind, chi2.sf, t.sf).
constexpr double kTtestP = 0.08051623795726257;
constexpr double kChi2P405 = 0.04417134490844271;
constexpr double kT35df12 = 0.0043818694317481486;
constexpr double kChi2_10_df3 = 0.01856613546304325;

TEST_CASE("t-test on the five-element samples") {
  const std::vector<double> a = {1, 2, 3, 4, 5}, b = {3, 4, 5, 6, 7};
  const auto r = ttest_two_sample(a, b);
  // pooled variance 2.5, standard error sqrt(2.5 * 2/5) = 1
  CHECK(std::abs(r.t - (-2.0)) < 1e-12);
  CHECK(r.df == 8.0);
  CHECK(std::abs(r.d - (3.0 - 5.0) / std::sqrt((2.5 + 2.5) / 2.0)) < 1e-12);
  CHECK(std::abs(r.d - (-1.2649110640673518)) < 1e-6);
  CHECK(std::abs(r.p - kTtestP) < 1e-6);
  CHECK(r.m1 == 3.0);
  CHECK(r.s2 == doctest::Approx(std::sqrt(2.5)));
}

TEST_CASE("t distribution and chi-square tails") {
  CHECK(std::abs(student_t_two_tailed(3.5, 12) - kT35df12) < 1e-9);
  CHECK(std::abs(student_t_two_tailed(-3.5, 12) - kT35df12) < 1e-9);
  CHECK(std::abs(chi_square_sf(10.0, 3) - kChi2_10_df3) < 1e-9);
  CHECK(student_t_two_tailed(0.0, 5) == doctest::Approx(1.0));
}

TEST_CASE("t-test edge cases") {
  const std::vector<double> c1 = {2, 2, 2}, c2 = {2, 2, 2}, c3 = {5, 5, 5};
  CHECK(ttest_two_sample(c1, c2).p == 1.0);
  const auto r = ttest_two_sample(c1, c3);
  CHECK(r.infinite_t);
  CHECK(r.p == 0.0);
  const std::vector<double> one = {1.0};
  CHECK_THROWS_AS(ttest_two_sample(one, c1), ValidationError);
}

TEST_CASE("t-test is antisymmetric in its samples") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(3 + trial % 7), b(4 + trial % 5);
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng) + 0.5;
    const auto ab = ttest_two_sample(a, b), ba = ttest_two_sample(b, a);
    CHECK(ab.t == doctest::Approx(-ba.t));
    CHECK(ab.d == doctest::Approx(-ba.d));
    CHECK(ab.p == doctest::Approx(ba.p));
    CHECK(ab.p >= 0.0);
    CHECK(ab.p <= 1.0);
  }
}

TEST_CASE("McNemar with continuity correction") {
  const auto r = mcnemar_from_counts(15, 5, 100);
  CHECK(r.chi2 == 4.05);
  CHECK(std::abs(r.phi - 0.2012) < 1e-4);
  CHECK(std::abs(r.p - kChi2P405) < 1e-9);
  const auto none = mcnemar_from_counts(0, 0, 10);
  CHECK(none.chi2 == 0.0);
  CHECK(none.p == 1.0);
  CHECK(mcnemar_from_counts(3, 4, 10).chi2 == 0.0);
}

TEST_CASE("McNemar counts discordant pairs from predictions") {
  using L = Label;
  const std::vector<L> ref = {L::Empathy, L::Empathy, L::Neutral, L::Neutral, L::Empathy};
  const std::vector<L> a = {L::Empathy, L::Empathy, L::Neutral, L::Empathy, L::Neutral};
  const std::vector<L> b = {L::Neutral, L::Empathy, L::Empathy, L::Empathy, L::Empathy};
  const auto r = mcnemar(a, b, ref);
  CHECK(r.b == 2);
  CHECK(r.c == 1);
  CHECK(r.n == 5);
}

TEST_CASE("correlate report ranks the shifted feature first") {
  auto schema = std::make_shared<FeatureSchema>();
  schema->id = "t";
  schema->names = {"noise_a", "shifted", "noise_b", "flat"};
  FeatureTable neu, emp;
  neu.schema = emp.schema = schema;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    const std::vector<double> x = {n(rng), n(rng), n(rng), 1.0};
    const std::vector<double> y = {n(rng), n(rng) + 2.0, n(rng), 1.0};
    neu.append("n" + std::to_string(i), Label::Neutral, 1.0, x);
    emp.append("e" + std::to_string(i), Label::Empathy, 1.0, y);
  }
  const auto rows = correlate_report(neu, emp, 0.01);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].feature == "shifted");
  CHECK(rows[0].significant);
  CHECK(rows[0].test.d < 0.0);
  CHECK(rows.back().feature == "flat");
  CHECK(rows.back().constant);
  std::ostringstream csv;
  write_correlate_csv(rows, csv);
  CHECK(csv.str().find("shifted") != std::string::npos);
  CHECK(format_correlate_table(rows, 2).find("noise_b") == std::string::npos);
}
