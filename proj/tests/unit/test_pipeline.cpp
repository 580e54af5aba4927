#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "empathy/pipeline.hpp"
#include "empathy/synth.hpp"

using namespace empathy;
namespace fs = std::filesystem;

namespace {

/// Small shared corpus: 12 short conversations.
const fs::path& small_corpus() {
  static const fs::path dir = [] {
    const auto d = fs::temp_directory_path() / "empathy_unit_pipeline_corpus";
    fs::remove_all(d);
    SynthSpec s;
    s.n_conversations = 12;
    s.neutral_mean_s = 40.0;
    s.neutral_std_s = 10.0;
    s.seed = 3;
    generate(s, d);
    return d;
  }();
  return dir;
}

PipelineConfig small_config(const std::string& work) {
  PipelineConfig c;
  c.corpus = small_corpus() / "manifest.json";
  c.work_dir = fs::temp_directory_path() / work;
  c.lexicon = EMPATHY_FIXTURE_LEXICON;
  c.c_grid = "1e-3:1";
  c.g_grid = "1e-3:1";
  c.baseline_trials = 50;
  fs::remove_all(c.work_dir);
  return c;
}

}  // namespace

TEST_CASE("configuration from INI with overrides") {
  const auto dir = fs::temp_directory_path() / "empathy_unit_ini";
  fs::create_directories(dir);
  std::ofstream(dir / "run.ini") << "[paths]\ncorpus = corpus/manifest.json\n[select]\nbatch = 50\n"
                                    "[train]\nc_grid = 0.1,1\n[run]\nseed = 9\n";
  auto c = PipelineConfig::load(dir / "run.ini");
  CHECK(c.corpus == (dir / "corpus/manifest.json").lexically_normal());
  CHECK(c.select_batch == 50);
  CHECK(c.c_grid == "0.1,1");
  CHECK(c.seed == 9);
  c.set("balance.bins", "deciles");
  c.set("vad.threshold_db", "-25");
  CHECK(c.bins == "deciles");
  CHECK(c.vad.energy_threshold_db == -25.0);
  CHECK_THROWS_AS(c.set("select.nope", "1"), ValidationError);
  CHECK_THROWS_AS(c.set("select.batch", "many"), ValidationError);

  std::ofstream(dir / "round.ini") << c.to_ini();
  const auto back = PipelineConfig::load(dir / "round.ini");
  CHECK(back.to_ini() == c.to_ini());

  std::ofstream(dir / "bad.ini") << "[select]\nbatchsize = 3\n";
  CHECK_THROWS_AS(PipelineConfig::load(dir / "bad.ini"), ValidationError);
  PipelineConfig ratios;
  ratios.train_ratio = 0.9;
  CHECK_THROWS_AS(ratios.validate(), ValidationError);
}

TEST_CASE("instances are clipped to t_e and split at the onset") {
  const SegmentPair pair{"c", {Channel::Agent, 0.0, 10.0, Label::Neutral}, {Channel::Agent, 10.0, 14.0, Label::Empathy}};
  const std::vector<Span> speech = {{0.5, 3.0}, {3.2, 3.4}, {8.0, 12.0}, {12.5, 16.0}, {17.0, 19.0}};
  const auto inst = make_instances(pair, speech, 0.5);
  REQUIRE(inst.size() == 4);
  CHECK(inst[0].span == Span{0.5, 3.0});
  CHECK(inst[1].span == Span{8.0, 10.0});
  CHECK(inst[1].label == Label::Neutral);
  CHECK(inst[2].span == Span{10.0, 12.0});
  CHECK(inst[2].label == Label::Empathy);
  CHECK(inst[3].span == Span{12.5, 14.0});
  CHECK(inst[0].id == "c#0000");
  const auto path = fs::temp_directory_path() / "empathy_unit_instances.json";
  save_instances(inst, path);
  const auto back = load_instances(path);
  REQUIRE(back.size() == inst.size());
  CHECK(back[3].span == inst[3].span);
  CHECK(back[2].label == Label::Empathy);
}

TEST_CASE("splits are speaker-disjoint") {
  const Corpus corpus = load_manifest(small_corpus() / "manifest.json");
  PipelineConfig c;
  const auto s = split_corpus(corpus, c);
  CHECK(s.train.size() + s.dev.size() + s.test.size() == corpus.size());
  CHECK(s.train.size() == 8);
  std::set<std::string> all(s.train.begin(), s.train.end());
  all.insert(s.dev.begin(), s.dev.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == corpus.size());
  c.seed = 2;
  CHECK(split_corpus(corpus, c).train != s.train);
}

TEST_CASE("a split file that shares a speaker is rejected") {
  Corpus corpus = load_manifest(small_corpus() / "manifest.json");
  corpus[1].speaker_id = corpus[0].speaker_id;
  Splits s;
  for (std::size_t i = 0; i < corpus.size(); ++i) (i == 1 ? s.test : i < 8 ? s.train : s.dev).push_back(corpus[i].id);
  CHECK_THROWS_AS(validate_splits(corpus, s), ValidationError);
  const auto path = fs::temp_directory_path() / "empathy_unit_splits.json";
  save_splits(s, path);
  PipelineConfig c;
  c.split_file = path;
  CHECK_THROWS_AS(split_corpus(corpus, c), ValidationError);
  Splits unknown;
  unknown.train = {"nope"};
  CHECK_THROWS_AS(validate_splits(corpus, unknown), ValidationError);
}

TEST_CASE("pipeline runs end to end and writes its artifacts") {
  auto c = small_config("empathy_unit_pipeline_work");
  const auto r = run_pipeline(c);
  for (const char* name : {"acoustic", "lexical", "psycho", "fused", "majority_vote"}) {
    CAPTURE(name);
    const auto& s = r.system(name);
    CHECK(s.test_ua >= 0.0);
    CHECK(s.test_ua <= 1.0);
  }
  CHECK(r.minority_trajectory.size() == 3);
  CHECK(r.minority_trajectory[1] > r.minority_trajectory[0]);
  CHECK(r.minority_trajectory[2] > r.minority_trajectory[1]);
  CHECK(r.significance.size() == 4);
  const fs::path w = c.work_dir;
  for (const char* f : {"report.json", "provenance.json", "config.ini", "splits.json", "models/acoustic.json",
                        "hyp/majority_vote.json", "features/vocabulary.tsv", "select/lexical_curve.csv",
                        "balance/smote_acoustic.json"})
    CHECK_MESSAGE(fs::exists(w / f), f);
  const auto report = nlohmann::json::parse(std::ifstream(w / "report.json"));
  CHECK(report.contains("systems"));
  CHECK(report.contains("random_baseline"));
  CHECK_THROWS_AS(r.system("nope"), ValidationError);
}

TEST_CASE("stage failures name the stage") {
  auto c = small_config("empathy_unit_pipeline_fail");
  c.vad.energy_threshold_db = 200.0;  // no frame passes, so no instances
  try {
    run_pipeline(c);
    FAIL("expected a StageError");
  } catch (const StageError& e) {
    CHECK(std::string(e.what()).starts_with(e.stage() + ": "));
    CHECK(e.stage() == "undersample");
  }
  auto lex = small_config("empathy_unit_pipeline_lex");
  lex.lexicon = fs::temp_directory_path() / "empathy_missing_lexicon.dic";
  CHECK_THROWS_AS(run_pipeline(lex), ValidationError);
  auto bad = small_config("empathy_unit_pipeline_bad");
  bad.corpus = fs::temp_directory_path() / "empathy_no_such_manifest.json";
  CHECK_THROWS_AS(run_pipeline(bad), ValidationError);
}
