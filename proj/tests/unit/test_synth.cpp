#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include "empathy/random.hpp"
#include "empathy/synth.hpp"
#include "empathy/text.hpp"

using namespace empathy;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("empathy_unit_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("truncated normal parent reproduces the requested moments") {
  for (auto [mean, sd, lo] : {std::tuple{220.0, 148.0, 10.0}, std::tuple{19.0, 13.0, 3.0}}) {
    const auto [mu, sigma] = truncated_normal_parent(mean, sd, lo);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(mu, sigma);
    double s = 0.0, s2 = 0.0;
    int k = 0;
    while (k < 200000) {
      const double x = n(rng);
      if (x < lo) continue;
      s += x;
      s2 += x * x;
      ++k;
    }
    const double m = s / k, v = s2 / k - m * m;
    CHECK(m == doctest::Approx(mean).epsilon(0.01));
    CHECK(std::sqrt(v) == doctest::Approx(sd).epsilon(0.02));
  }
}

TEST_CASE("derived seeds differ by name and are stable") {
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
}

TEST_CASE("synthetic corpus durations follow the configured means") {
  SynthSpec spec;
  spec.n_conversations = 100;
  spec.seed = 7;
  const auto dir = fresh_dir("synth100");
  const Corpus corpus = generate(spec, dir);
  const auto pairs = extract_segment_pairs(corpus).pairs;
  REQUIRE(pairs.size() == 100);
  double neu = 0.0, emp = 0.0;
  for (const auto& p : pairs) {
    neu += p.neutral.length();
    emp += p.empathy.length();
    CHECK(p.empathy.length() >= spec.empathy_min_s - 1.0);
  }
  CHECK(std::abs(neu / 100.0 - 220.0) <= 0.15 * 220.0);
  CHECK(std::abs(emp / 100.0 - 19.0) <= 0.15 * 19.0);
  CHECK(fs::exists(dir / "manifest.json"));
  // the manifest loads and validates like any other corpus
  CHECK(load_manifest(dir / "manifest.json").size() == 100);
  fs::remove_all(dir);
}

TEST_CASE("generation is deterministic per seed") {
  SynthSpec spec;
  spec.n_conversations = 3;
  spec.neutral_mean_s = 40.0;
  spec.neutral_std_s = 10.0;
  const auto a = fresh_dir("det_a"), b = fresh_dir("det_b"), c = fresh_dir("det_c");
  generate(spec, a);
  generate(spec, b);
  spec.seed = 2;
  generate(spec, c);
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  CHECK(slurp(a / "audio" / "conv0001_agent.wav") == slurp(b / "audio" / "conv0001_agent.wav"));
  CHECK(slurp(a / "manifest.json") != slurp(c / "manifest.json"));
}

TEST_CASE("keywords mark empathy transcripts only when shifted") {
  SynthSpec spec;
  spec.n_conversations = 4;
  spec.neutral_mean_s = 40.0;
  spec.neutral_std_s = 10.0;
  auto keyword_hits = [&](const SynthSpec& s, const std::string& name) {
    const auto corpus = generate(s, fresh_dir(name));
    long in_emp = 0, in_neu = 0;
    for (const auto& p : extract_segment_pairs(corpus).pairs) {
      const auto& conv = *std::find_if(corpus.begin(), corpus.end(), [&](const auto& c) { return c.id == p.conversation_id; });
      const auto e = transcript_text(conv, Channel::Agent, p.empathy.span());
      const auto n = transcript_text(conv, Channel::Agent, p.neutral.span());
      for (const auto& k : s.keywords) {
        in_emp += e.find(k) != std::string::npos;
        in_neu += n.find(k) != std::string::npos;
      }
    }
    return std::pair{in_emp, in_neu};
  };
  const auto [e1, n1] = keyword_hits(spec, "kw_shift");
  CHECK(e1 > 0);
  CHECK(n1 == 0);
  const auto flat = spec.without_shift();
  CHECK(flat.pitch_shift_pct == 0.0);
  CHECK(flat.loudness_shift_db == 0.0);
  const auto [e2, n2] = keyword_hits(flat, "kw_flat");
  CHECK(e2 == 0);
  CHECK(n2 == 0);
}

TEST_CASE("invalid generator settings") {
  SynthSpec s;
  s.n_conversations = 0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = {};
  s.keyword_rate = 1.5;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = {};
  s.utterance_min_s = 6.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}
