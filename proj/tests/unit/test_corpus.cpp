#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "empathy/corpus.hpp"
#include "empathy/wav.hpp"

using namespace empathy;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("empathy_unit_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

json segment(const char* ch, double a, double b, const char* label) {
  return {{"channel", ch}, {"start_s", a}, {"end_s", b}, {"label", label}};
}

/// Two 10 s silent channels plus a manifest holding `conversations`.
fs::path write_corpus(const fs::path& dir, const json& conversations) {
  const std::vector<float> silence(80000, 0.0f);
  write_wav(dir / "a.wav", silence);
  write_wav(dir / "c.wav", silence);
  std::ofstream(dir / "manifest.json") << conversations.dump();
  return dir / "manifest.json";
}

json conversation(const std::string& id, json tier) {
  return {{"id", id}, {"speaker_id", "s_" + id}, {"agent_wav", "a.wav"}, {"customer_wav", "c.wav"},
          {"tiers", {{"ann1", tier}}}};
}

Segment agent(double a, double b, Label l) { return {Channel::Agent, a, b, l}; }

}  // namespace

TEST_CASE("label and channel names round trip") {
  for (Label l : {Label::Empathy, Label::Neutral, Label::Anger, Label::Frustration})
    CHECK(parse_label(to_string(l)) == l);
  CHECK_FALSE(parse_label("Joy"));
  CHECK(parse_channel("agent") == Channel::Agent);
  CHECK(label_allowed_on(Label::Empathy, Channel::Agent));
  CHECK_FALSE(label_allowed_on(Label::Empathy, Channel::Customer));
  CHECK_FALSE(label_allowed_on(Label::Anger, Channel::Agent));
  CHECK(label_allowed_on(Label::Neutral, Channel::Customer));
}

TEST_CASE("wav round trip") {
  const auto d = fresh_dir("wav");
  std::vector<float> x = {0.0f, 0.5f, -0.5f, 0.25f, 2.0f};
  write_wav(d / "x.wav", x);
  const auto info = read_wav_info(d / "x.wav");
  CHECK(info.sample_rate == 8000);
  CHECK(info.frames == 5);
  const auto a = read_wav(d / "x.wav");
  REQUIRE(a.samples.size() == 5);
  CHECK(a.samples[1] == doctest::Approx(0.5f).epsilon(1e-4));
  CHECK(a.samples[4] <= 1.0f);
  std::ofstream(d / "bad.wav") << "not a wav file at all";
  CHECK_THROWS_AS(read_wav_info(d / "bad.wav"), ValidationError);
}

TEST_CASE("manifest load, pairs and save round trip") {
  const auto d = fresh_dir("manifest");
  json convs = json::array();
  convs.push_back(conversation("c1", {segment("agent", 0, 6, "Neutral"), segment("agent", 6, 8, "Empathy"),
                                      segment("agent", 8, 10, "Neutral"), segment("customer", 1, 3, "Anger")}));
  convs.push_back(conversation("c0", {segment("agent", 0, 4, "Empathy"), segment("agent", 4, 10, "Neutral")}));
  convs.push_back(conversation("c2", {segment("agent", 0, 10, "Neutral")}));
  const auto path = write_corpus(d, convs);
  const Corpus corpus = load_manifest(path);
  REQUIRE(corpus.size() == 3);
  CHECK(corpus[0].duration_s == doctest::Approx(10.0));
  const auto pairs = extract_segment_pairs(corpus);
  REQUIRE(pairs.pairs.size() == 1);
  CHECK(pairs.pairs[0].conversation_id == "c1");
  CHECK(pairs.pairs[0].neutral.span() == Span{0, 6});
  CHECK(pairs.pairs[0].empathy.span() == Span{6, 8});
  CHECK(pairs.skipped_ids == std::vector<std::string>{"c0"});

  save_manifest(corpus, d / "copy.json");
  const Corpus again = load_manifest(d / "copy.json");
  REQUIRE(again.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) CHECK(again[i].tiers == corpus[i].tiers);

  const auto co = cooccurrence(corpus);
  CHECK(co.counts[0][0] == 1);  // upset customer, empathic agent
  CHECK(co.counts[1][0] == 1);
  CHECK(co.counts[1][1] == 1);
  CHECK(co.total() == 3);
  CHECK(co.percent(0, 0) == doctest::Approx(100.0 / 3.0));
}

TEST_CASE("manifest violations name the conversation") {
  const auto d = fresh_dir("invalid");
  const std::vector<std::pair<const char*, json>> cases = {
      {"overlap", conversation("bad", {segment("agent", 0, 6, "Neutral"), segment("agent", 5, 8, "Empathy")})},
      {"range", conversation("bad", {segment("agent", 0, 12, "Neutral")})},
      {"channel", conversation("bad", {segment("customer", 0, 2, "Empathy")})},
      {"order", conversation("bad", {segment("agent", 3, 2, "Neutral")})},
      {"label", conversation("bad", {segment("agent", 0, 2, "Joy")})},
  };
  for (const auto& [name, conv] : cases) {
    CAPTURE(name);
    const auto path = write_corpus(d, json::array({conv}));
    try {
      load_manifest(path);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("bad") != std::string::npos);
    }
  }
  json dup = json::array({conversation("x", json::array()), conversation("x", json::array())});
  CHECK_THROWS_AS(load_manifest(write_corpus(d, dup)), ValidationError);
  json missing = conversation("m", json::array());
  missing["agent_wav"] = "nope.wav";
  CHECK_THROWS_AS(load_manifest(write_corpus(d, json::array({missing}))), ValidationError);
  CHECK_THROWS_AS(load_manifest(d / "absent.json"), ValidationError);
}

TEST_CASE("kappa on the 64-conversation agreement fixture") {
  // 20 both marked with equal onsets, 8 only A, 7 only B, 29 neither
  AnnotationSet A, B;
  auto marked = [](double onset) { return std::vector<Segment>{agent(0, onset, Label::Neutral), agent(onset, onset + 5, Label::Empathy)}; };
  const std::vector<Segment> plain = {agent(0, 60, Label::Neutral)};
  int k = 0;
  auto id = [&] { return "c" + std::to_string(k++); };
  for (int i = 0; i < 20; ++i) { auto n = id(); A[n] = marked(30); B[n] = marked(30); }
  for (int i = 0; i < 8; ++i) { auto n = id(); A[n] = marked(30); B[n] = plain; }
  for (int i = 0; i < 7; ++i) { auto n = id(); A[n] = plain; B[n] = marked(30); }
  for (int i = 0; i < 29; ++i) { auto n = id(); A[n] = plain; B[n] = plain; }

  const double n = 64.0;
  const double po = (20.0 + 29.0) / n;
  const double pe = (28.0 / n) * (27.0 / n) + (36.0 / n) * (37.0 / n);
  const double expected = (po - pe) / (1.0 - pe);
  const auto r = kappa_with_tolerance(A, B, 5.0);
  CHECK(std::abs(r.kappa - expected) < 1e-9);
  CHECK(std::abs(r.kappa - 1048.0 / 2008.0) < 1e-9);
  CHECK(r.both_yes == 20);
  CHECK(r.a_only == 8);
  CHECK(r.b_only == 7);
  CHECK(r.both_no == 29);
  CHECK(r.percent_agreement == doctest::Approx(100.0 * 49.0 / 64.0));
  CHECK(std::abs(cohen_kappa(20, 8, 7, 29) - expected) < 1e-12);
}

TEST_CASE("onset tolerance decides agreement") {
  AnnotationSet A, B;
  A["x"] = {agent(0, 30, Label::Neutral), agent(30, 35, Label::Empathy)};
  B["x"] = {agent(0, 34, Label::Neutral), agent(34, 40, Label::Empathy)};
  A["y"] = {agent(0, 60, Label::Neutral)};
  B["y"] = {agent(0, 60, Label::Neutral)};
  const auto loose = kappa_with_tolerance(A, B, 5.0);
  CHECK(loose.both_yes == 1);
  CHECK(loose.kappa == doctest::Approx(1.0));
  const auto strict = kappa_with_tolerance(A, B, 1.0);
  CHECK(strict.both_yes_mismatch == 1);
  CHECK(strict.percent_agreement == doctest::Approx(50.0));
  CHECK(segment_agreement(A, B, 5.0).matched == 1);
  CHECK(segment_agreement(A, B, 1.0).matched == 0);
  CHECK_THROWS_AS(kappa_with_tolerance(A, B, -1.0), ValidationError);
}

TEST_CASE("kappa is symmetric and bounded on random tiers") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    AnnotationSet A, B;
    for (int i = 0; i < 40; ++i) {
      const auto n = "c" + std::to_string(i);
      const double oa = 10.0 + static_cast<double>(rng() % 50), ob = oa + static_cast<double>(rng() % 9) - 4.0;
      A[n] = rng() % 3 ? std::vector<Segment>{agent(0, oa, Label::Neutral), agent(oa, oa + 5, Label::Empathy)}
                       : std::vector<Segment>{agent(0, 70, Label::Neutral)};
      B[n] = rng() % 3 ? std::vector<Segment>{agent(0, ob, Label::Neutral), agent(ob, ob + 5, Label::Empathy)}
                       : std::vector<Segment>{agent(0, 70, Label::Neutral)};
    }
    const auto ab = kappa_with_tolerance(A, B, 2.0), ba = kappa_with_tolerance(B, A, 2.0);
    CHECK(ab.kappa == doctest::Approx(ba.kappa));
    CHECK(ab.kappa <= 1.0);
    CHECK(ab.kappa >= -1.0);
  }
}
