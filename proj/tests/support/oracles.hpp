#pragma once

// Independent reference computations and fixtures shared by the unit and
// acceptance tests. Nothing here calls into the code it is used to check.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "empathy/evaluation.hpp"
#include "empathy/wav.hpp"

namespace oracle {

inline empathy::Audio sine(double f_hz, double seconds, double amplitude = 0.5, int sr = 8000) {
  empathy::Audio a;
  a.sample_rate = sr;
  const auto n = static_cast<std::size_t>(seconds * sr);
  for (std::size_t i = 0; i < n; ++i)
    a.samples.push_back(static_cast<float>(amplitude * std::sin(2.0 * std::numbers::pi * f_hz * i / sr)));
  return a;
}

inline empathy::Audio sawtooth(double f_hz, double seconds, double amplitude = 0.5, int sr = 8000) {
  empathy::Audio a;
  a.sample_rate = sr;
  const auto n = static_cast<std::size_t>(seconds * sr);
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = std::fmod(f_hz * static_cast<double>(i) / sr, 1.0);
    a.samples.push_back(static_cast<float>(amplitude * (2.0 * phase - 1.0)));
  }
  return a;
}

inline empathy::Audio white_noise(double seconds, std::uint64_t seed, double amplitude = 0.3, int sr = 8000) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  empathy::Audio a;
  a.sample_rate = sr;
  const auto n = static_cast<std::size_t>(seconds * sr);
  for (std::size_t i = 0; i < n; ++i) a.samples.push_back(static_cast<float>(amplitude * u(rng)));
  return a;
}

inline std::vector<double> to_double(const empathy::Audio& a, std::size_t from, std::size_t n) {
  return {a.samples.begin() + static_cast<long>(from), a.samples.begin() + static_cast<long>(from + n)};
}

/// Relief weights by full scan: nearest hit and miss under Manhattan distance
/// (lowest index on ties), 0/1 difference per feature, averaged over all rows.
inline std::vector<double> relief_bruteforce(const std::vector<std::vector<int>>& X, const std::vector<int>& y) {
  const std::size_t m = X.size(), d = X.empty() ? 0 : X[0].size();
  std::vector<double> w(d, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    long best_hit = std::numeric_limits<long>::max(), best_miss = best_hit;
    long hit = -1, miss = -1;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      long dist = 0;
      for (std::size_t f = 0; f < d; ++f) dist += std::abs(X[i][f] - X[j][f]);
      if (y[j] == y[i] && dist < best_hit) {
        best_hit = dist;
        hit = static_cast<long>(j);
      }
      if (y[j] != y[i] && dist < best_miss) {
        best_miss = dist;
        miss = static_cast<long>(j);
      }
    }
    for (std::size_t f = 0; f < d; ++f) {
      if (hit >= 0) w[f] -= X[i][f] != X[static_cast<std::size_t>(hit)][f] ? 1.0 : 0.0;
      if (miss >= 0) w[f] += X[i][f] != X[static_cast<std::size_t>(miss)][f] ? 1.0 : 0.0;
    }
  }
  for (auto& v : w) v /= static_cast<double>(m);
  return w;
}

/// Confusion by sampling every `step` seconds at frame centres over [0, t_e).
inline empathy::WeightedConfusion frame_confusion(const std::vector<empathy::Segment>& ref,
                                                  const std::vector<empathy::LabeledSpan>& hyp,
                                                  empathy::Label gap_label, double step = 0.01) {
  using empathy::Label;
  empathy::WeightedConfusion c;
  const double t_end = ref.back().end_s;
  const auto frames = static_cast<long>(std::floor(t_end / step));
  for (long k = 0; k < frames; ++k) {
    const double t = (static_cast<double>(k) + 0.5) * step;
    Label r = Label::Neutral;
    for (const auto& s : ref)
      if (t >= s.start_s && t < s.end_s) r = s.label;
    Label h = gap_label;
    for (const auto& s : hyp)
      if (t >= s.start_s && t < s.end_s) h = s.label;
    const bool re = r == Label::Empathy, he = h == Label::Empathy;
    (re ? (he ? c.tp : c.fn) : (he ? c.fp : c.tn)) += step;
  }
  return c;
}

/// Imbalanced duration pool: 60 Empathy and 940 Neutral segment durations
/// (6% / 94%), log-normal around the class means used by the generator.
struct ImbalancePool {
  std::vector<double> minority;
  std::vector<double> majority;
};

inline ImbalancePool imbalance_pool(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> emp(std::log(4.0), 0.5), neu(std::log(4.0), 0.7);
  ImbalancePool p;
  for (int i = 0; i < 60; ++i) p.minority.push_back(0.5 + emp(rng));
  for (int i = 0; i < 940; ++i) p.majority.push_back(0.5 + neu(rng));
  return p;
}

}  // namespace oracle
