// Command-line front end: one subcommand per pipeline stage plus `run`.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "empathy/acoustic.hpp"
#include "empathy/balance.hpp"
#include "empathy/corpus.hpp"
#include "empathy/evaluation.hpp"
#include "empathy/feature_select.hpp"
#include "empathy/pipeline.hpp"
#include "empathy/stats.hpp"
#include "empathy/svm.hpp"
#include "empathy/synth.hpp"
#include "empathy/text.hpp"
#include "empathy/vad.hpp"

namespace fs = std::filesystem;
using namespace empathy;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(bool as_json, const json& j, const std::string& text) {
  if (as_json) std::cout << j.dump(2) << "\n";
  else std::cout << text;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// Neutral and empathy segment of every pair as classification instances.
std::vector<Instance> pair_instances(const Corpus& corpus) {
  std::vector<Instance> out;
  for (const auto& p : extract_segment_pairs(corpus).pairs) {
    out.push_back({p.conversation_id + "/neutral", p.conversation_id, p.neutral.span(), Label::Neutral});
    out.push_back({p.conversation_id + "/empathy", p.conversation_id, p.empathy.span(), Label::Empathy});
  }
  return out;
}

std::vector<std::size_t> read_selected(const fs::path& path, const FeatureTable& table) {
  std::map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < table.cols(); ++j) index.emplace(table.schema->names[j], j);
  std::vector<std::size_t> cols;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto it = index.find(line.substr(0, line.find('\t')));
    if (it == index.end()) throw ValidationError("selected feature '" + line + "' is not in the table");
    cols.push_back(it->second);
  }
  return cols;
}

Hypothesis decisions_to_hypothesis(const std::vector<Decision>& decisions, const std::vector<Instance>& instances) {
  std::map<std::string, const Instance*> by_id;
  for (const auto& i : instances) by_id.emplace(i.id, &i);
  Hypothesis hyp;
  for (const auto& d : decisions) {
    const auto it = by_id.find(d.segment_id);
    if (it == by_id.end()) throw ValidationError("no instance span for segment '" + d.segment_id + "'");
    hyp[it->second->conversation_id].push_back(
        {it->second->span.start_s, it->second->span.end_s, d.label, d.margin});
  }
  for (auto& [id, spans] : hyp)
    std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
  return hyp;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Empathy classification pipeline for two-channel conversations"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "Machine-readable output");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled corpus");
  SynthSpec spec;
  fs::path synth_out;
  bool no_shift = false;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("-n,--conversations", spec.n_conversations, "Number of conversations");
  synth->add_option("--seed", spec.seed, "Random seed");
  synth->add_option("--pitch-shift", spec.pitch_shift_pct, "Empathy F0 shift in percent");
  synth->add_option("--loudness-shift", spec.loudness_shift_db, "Empathy level shift in dB");
  synth->add_option("--keyword-rate", spec.keyword_rate, "Share of empathy utterances with a keyword phrase");
  synth->add_option("--neutral-keyword-rate", spec.neutral_keyword_rate, "Same for neutral utterances");
  synth->add_flag("--no-shift", no_shift, "No acoustic or lexical difference between classes");

  // segment
  auto* segment = app.add_subcommand("segment", "Energy-based speech/non-speech segmentation");
  fs::path seg_wav, seg_ref, seg_out;
  VadConfig vad;
  segment->add_option("--wav", seg_wav, "Mono 8 kHz WAV file")->required()->check(CLI::ExistingFile);
  segment->add_option("--vad-threshold-db", vad.energy_threshold_db, "Threshold relative to the median frame energy");
  segment->add_option("--min-speech-ms", vad.min_speech_ms);
  segment->add_option("--min-gap-ms", vad.min_gap_ms);
  segment->add_option("--ref", seg_ref, "Reference spans JSON; prints frame-level F-measure");
  segment->add_option("--out", seg_out, "Write spans JSON here");

  // extract
  auto* extract = app.add_subcommand("extract", "Feature extraction for segment pairs or instances");
  fs::path ex_manifest, ex_out, ex_instances, ex_lexicon = EMPATHY_DEFAULT_LEXICON, ex_vocab;
  std::string ex_features = "acoustic";
  extract->add_option("--manifest", ex_manifest)->required()->check(CLI::ExistingFile);
  extract->add_option("--features", ex_features, "acoustic | lexical | psycho")
      ->check(CLI::IsMember({"acoustic", "lexical", "psycho"}));
  extract->add_option("--instances", ex_instances, "Instance list JSON (default: neutral/empathy pairs)");
  extract->add_option("--lexicon", ex_lexicon, "LIWC-format dictionary");
  extract->add_option("--vocab", ex_vocab, "Vocabulary file; built from the instances and written next to --out when absent");
  extract->add_option("--out", ex_out, "CSV (or .svec) output")->required();

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Per-feature t-test of Neutral against Empathy");
  fs::path an_features, an_out;
  double alpha = 0.01;
  std::size_t an_top = 20;
  analyze->add_option("--features", an_features)->required()->check(CLI::ExistingFile);
  analyze->add_option("--alpha", alpha);
  analyze->add_option("--top", an_top, "Rows to print (0 = all)");
  analyze->add_option("--out", an_out, "Full report CSV");

  // balance
  auto* balance = app.add_subcommand("balance", "Binned undersampling and SMOTE");
  fs::path bal_in, bal_out, bal_audit;
  std::string bins = "deciles";
  std::size_t per_bin = 1;
  SmoteConfig smote_config;
  smote_config.percent = 100.0;
  balance->add_option("--features", bal_in)->required()->check(CLI::ExistingFile);
  balance->add_option("--bins", bins, "deciles | quantiles:K | calibrated:F | e1,e2,...");
  balance->add_option("--per-bin", per_bin);
  balance->add_option("--smote-percent", smote_config.percent);
  balance->add_option("--k", smote_config.k, "SMOTE neighbours");
  balance->add_option("--seed", smote_config.seed);
  balance->add_option("--out", bal_out)->required();
  balance->add_option("--audit", bal_audit, "SMOTE provenance JSON");

  // select
  auto* select = app.add_subcommand("select", "Relief ranking and learning-curve cutoff");
  fs::path sel_train, sel_dev, sel_out, sel_curve;
  std::size_t batch = 200, sel_bins = 10;
  double epsilon = 0.005, sel_c = 0.01;
  bool sel_raw = false;
  select->add_option("--train", sel_train)->required()->check(CLI::ExistingFile);
  select->add_option("--dev", sel_dev)->required()->check(CLI::ExistingFile);
  select->add_option("--batch", batch);
  select->add_option("--epsilon", epsilon);
  select->add_option("--bins", sel_bins, "Equal-frequency bins");
  select->add_option("--c", sel_c, "C of the learning-curve SVM");
  select->add_flag("--no-normalize", sel_raw);
  select->add_option("--out", sel_out, "Selected feature names")->required();
  select->add_option("--curve", sel_curve, "Learning curve CSV");

  // train
  auto* train = app.add_subcommand("train", "Grid-tune on dev, retrain on train+dev");
  fs::path tr_train, tr_dev, tr_selected, tr_model;
  std::string kernel = "linear", c_grid = "1e-5:10", g_grid = "1e-5:10";
  bool tr_raw = false;
  train->add_option("--train", tr_train)->required()->check(CLI::ExistingFile);
  train->add_option("--dev", tr_dev)->required()->check(CLI::ExistingFile);
  train->add_option("--kernel", kernel)->check(CLI::IsMember({"linear", "gaussian"}));
  train->add_option("--c-grid", c_grid);
  train->add_option("--g-grid", g_grid);
  train->add_option("--selected", tr_selected, "Feature names to use");
  train->add_flag("--no-normalize", tr_raw);
  train->add_option("--model", tr_model)->required();

  // predict
  auto* predict = app.add_subcommand("predict", "Classify instances into a hypothesis file");
  fs::path pr_model, pr_features, pr_instances, pr_out;
  predict->add_option("--model", pr_model)->required()->check(CLI::ExistingFile);
  predict->add_option("--features", pr_features)->required()->check(CLI::ExistingFile);
  predict->add_option("--instances", pr_instances, "Instance spans JSON")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", pr_out)->required();

  // fuse
  auto* fuse_cmd = app.add_subcommand("fuse", "Feature fusion or majority vote of hypotheses");
  fs::path fu_acoustic, fu_lexical, fu_out;
  std::vector<fs::path> fu_hyps;
  fuse_cmd->add_option("--acoustic", fu_acoustic, "Acoustic feature table");
  fuse_cmd->add_option("--lexical", fu_lexical, "Lexical feature table");
  fuse_cmd->add_option("--hyp", fu_hyps, "Hypothesis files to vote over");
  fuse_cmd->add_option("--out", fu_out)->required();

  // score
  auto* score_cmd = app.add_subcommand("score", "Duration-weighted segment-level scoring");
  fs::path sc_ref, sc_hyp;
  std::string gap_label = "Neutral";
  bool no_gaps = false;
  score_cmd->add_option("--ref", sc_ref, "Corpus manifest")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--hyp", sc_hyp)->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--gap-label", gap_label)->check(CLI::IsMember({"Neutral", "Empathy"}));
  score_cmd->add_flag("--ignore-gaps", no_gaps, "Leave uncovered time out of the confusion matrix");

  // agreement
  auto* agreement = app.add_subcommand("agreement", "Inter-annotator agreement and co-occurrence");
  fs::path ag_manifest;
  double tolerance = 5.0;
  std::string ann_a, ann_b;
  agreement->add_option("--manifest", ag_manifest)->required()->check(CLI::ExistingFile);
  agreement->add_option("--tolerance", tolerance, "Onset tolerance in seconds");
  agreement->add_option("--a", ann_a, "First annotator (default: first two tiers)");
  agreement->add_option("--b", ann_b);

  // run
  auto* run = app.add_subcommand("run", "Full pipeline");
  fs::path run_config, run_corpus, run_work, run_lexicon;
  std::vector<std::string> overrides;
  std::uint64_t run_seed = 0;
  run->add_option("--config", run_config, "INI configuration")->check(CLI::ExistingFile);
  run->add_option("--corpus", run_corpus, "Corpus manifest");
  run->add_option("--work-dir", run_work, "Work directory (env EMPATHY_WORK_DIR)");
  run->add_option("--lexicon", run_lexicon);
  run->add_option("--seed", run_seed);
  run->add_option("--set", overrides, "section.key=value override");
  run->add_option("--vad-threshold-db", vad.energy_threshold_db);
  run->add_option("--bins", bins);
  run->add_option("--batch", batch);
  run->add_option("--epsilon", epsilon);
  run->add_option("--c-grid", c_grid);
  run->add_option("--smote-percent", smote_config.percent);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth) {
      if (no_shift) spec = spec.without_shift();
      const Corpus c = generate(spec, synth_out);
      const auto pairs = extract_segment_pairs(c).pairs;
      double n = 0.0, e = 0.0;
      for (const auto& p : pairs) {
        n += p.neutral.length();
        e += p.empathy.length();
      }
      const double k = pairs.empty() ? 1.0 : static_cast<double>(pairs.size());
      emit(as_json,
           {{"conversations", c.size()}, {"manifest", (synth_out / "manifest.json").string()},
            {"mean_neutral_s", n / k}, {"mean_empathy_s", e / k}},
           "wrote " + std::to_string(c.size()) + " conversations to " + (synth_out / "manifest.json").string() +
               "\nmean neutral " + fmt("%.1f", n / k) + " s, mean empathy " + fmt("%.1f", e / k) + " s\n");
    } else if (*segment) {
      const auto spans = segment_speech(read_wav(seg_wav), vad);
      const std::string text = spans_to_json(spans);
      if (!seg_out.empty()) write_file(seg_out, text + "\n");
      if (!seg_ref.empty()) {
        const auto ref = spans_from_json(read_file(seg_ref));
        const auto s = vad_f_measure(ref, spans);
        json j = {{"precision", s.precision},
                  {"recall", s.recall ? json(*s.recall) : json(nullptr)},
                  {"f1", s.f1 ? json(*s.f1) : json(nullptr)},
                  {"spans", spans.size()}};
        emit(as_json, j,
             "precision " + fmt("%.4f", s.precision) + "  recall " + (s.recall ? fmt("%.4f", *s.recall) : "n/a") +
                 "  F1 " + (s.f1 ? fmt("%.4f", *s.f1) : "n/a") + "\n");
      } else if (seg_out.empty() || as_json) {
        std::cout << text << "\n";
      }
    } else if (*extract) {
      const Corpus corpus = load_manifest(ex_manifest);
      const auto instances = ex_instances.empty() ? pair_instances(corpus) : load_instances(ex_instances);
      FeatureTable table;
      if (ex_features == "acoustic") {
        FrameConfig frame;
        table = acoustic_table(corpus, instances, frame);
        write_file(fs::path(ex_out).concat(".json"), frame.to_json() + "\n");
      } else {
        const auto tokens = instance_tokens(corpus, instances);
        if (ex_features == "lexical") {
          Vocabulary vocab;
          if (!ex_vocab.empty() && fs::exists(ex_vocab)) {
            vocab = Vocabulary::load(ex_vocab);
          } else {
            vocab = Vocabulary::build(tokens);
            const fs::path vpath = ex_vocab.empty() ? fs::path(ex_out).replace_extension(".vocab.tsv") : ex_vocab;
            vocab.save(vpath);
          }
          table = lexical_table(instances, tokens, vocab);
        } else {
          table = psycho_table(instances, tokens, LexiconDict::load(ex_lexicon));
        }
      }
      write_features(table, ex_out);
      emit(as_json, {{"rows", table.rows()}, {"dim", table.cols()}, {"out", ex_out.string()}},
           "wrote " + std::to_string(table.rows()) + " x " + std::to_string(table.cols()) + " " + ex_features +
               " features to " + ex_out.string() + "\n");
    } else if (*analyze) {
      const FeatureTable t = read_features(an_features);
      std::vector<std::size_t> neu, emp;
      for (std::size_t i = 0; i < t.rows(); ++i) {
        if (t.labels[i] == Label::Neutral) neu.push_back(i);
        if (t.labels[i] == Label::Empathy) emp.push_back(i);
      }
      const auto rows = correlate_report(t.subset(neu), t.subset(emp), alpha);
      if (!an_out.empty()) {
        std::ofstream out(an_out);
        write_correlate_csv(rows, out);
      }
      json j = json::array();
      for (std::size_t i = 0; i < rows.size() && (an_top == 0 || i < an_top); ++i)
        j.push_back({{"feature", rows[i].feature}, {"t", rows[i].test.t}, {"p", rows[i].test.p},
                     {"d", rows[i].test.d}, {"significant", rows[i].significant}, {"constant", rows[i].constant}});
      emit(as_json, j, format_correlate_table(rows, an_top));
    } else if (*balance) {
      FeatureTable t = read_features(bal_in);
      std::vector<std::size_t> neutral;
      std::vector<double> durations;
      std::size_t n_min = 0;
      for (std::size_t i = 0; i < t.rows(); ++i) {
        if (t.labels[i] == Label::Empathy) {
          ++n_min;
        } else {
          neutral.push_back(i);
          durations.push_back(t.durations[i]);
        }
      }
      const BinSpec spec_bins = parse_bin_spec(bins, durations, n_min, per_bin);
      std::vector<bool> keep(t.rows(), false);
      for (std::size_t i = 0; i < t.rows(); ++i) keep[i] = t.labels[i] == Label::Empathy;
      for (auto k : binned_undersample(durations, spec_bins, smote_config.seed)) keep[neutral[k]] = true;
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < keep.size(); ++i)
        if (keep[i]) rows.push_back(i);
      FeatureTable out = t.subset(rows);
      const double share_before = static_cast<double>(n_min) / static_cast<double>(std::max<std::size_t>(t.rows(), 1));
      const double share_under = static_cast<double>(n_min) / static_cast<double>(std::max<std::size_t>(out.rows(), 1));
      const std::string audit = oversample(out, smote_config);
      if (!bal_audit.empty()) write_file(bal_audit, audit + "\n");
      write_features(out, bal_out);
      const double share_after =
          static_cast<double>(std::count(out.labels.begin(), out.labels.end(), Label::Empathy)) /
          static_cast<double>(std::max<std::size_t>(out.rows(), 1));
      emit(as_json,
           {{"bins", spec_bins.edges.size() + 1}, {"rows", out.rows()}, {"share_initial", share_before},
            {"share_undersampled", share_under}, {"share_oversampled", share_after}},
           "Empathy share " + fmt("%.1f%%", 100 * share_before) + " -> " + fmt("%.1f%%", 100 * share_under) +
               " -> " + fmt("%.1f%%", 100 * share_after) + " (" + std::to_string(out.rows()) + " rows)\n");
    } else if (*select) {
      const FeatureTable tr = read_features(sel_train), dv = read_features(sel_dev);
      const auto weights = relief_weights(discretize(dv.X, fit_discretizers(dv.X, sel_bins)), binary_targets(dv));
      TrainOptions options;
      options.normalize = !sel_raw;
      options.smo.C = sel_c;
      LinearCurveEvaluator evaluate(tr, dv, options);
      const auto curve = learning_curve_select(
          weights.ranking, batch, epsilon, [&](std::span<const std::size_t> prefix) { return evaluate(prefix); },
          binary_targets(dv));
      std::string names;
      for (auto c : curve.selected) names += tr.schema->names[c] + "\n";
      write_file(sel_out, names);
      if (!sel_curve.empty()) {
        std::ofstream out(sel_curve);
        write_learning_curve_csv(curve, out);
      }
      json j = {{"selected", curve.selected_k}, {"sizes", curve.sizes}, {"scores", curve.scores},
                {"warnings", curve.warnings}};
      std::string text;
      for (std::size_t i = 0; i < curve.sizes.size(); ++i)
        text += std::to_string(curve.sizes[i]) + "\t" + fmt("%.4f", curve.scores[i]) + "\n";
      emit(as_json, j, text + "selected " + std::to_string(curve.selected_k) + " features\n");
    } else if (*train) {
      const FeatureTable tr = read_features(tr_train), dv = read_features(tr_dev);
      const auto cols = tr_selected.empty() ? std::vector<std::size_t>{} : read_selected(tr_selected, tr);
      TrainOptions options;
      options.kernel.type = kernel == "gaussian" ? KernelType::Gaussian : KernelType::Linear;
      options.normalize = !tr_raw;
      const auto Cs = parse_grid(c_grid), Gs = parse_grid(g_grid);
      const auto grid = grid_tune(tr, dv, options, Cs, options.kernel.type == KernelType::Gaussian ? Gs : std::vector<double>{}, cols);
      options.smo.C = grid.best.C;
      if (options.kernel.type == KernelType::Gaussian) options.kernel.gamma = grid.best.gamma;
      const SvmModel model = smo_train(concat_rows(tr, dv), options, cols);
      model.save(tr_model);
      emit(as_json, {{"C", grid.best.C}, {"G", grid.best.gamma}, {"dev_ua", grid.best.score},
                     {"kkt_residual", model.kkt_residual}, {"converged", model.converged}},
           "best C " + fmt("%g", grid.best.C) + (options.kernel.type == KernelType::Gaussian ? " G " + fmt("%g", grid.best.gamma) : "") +
               " dev UA " + fmt("%.4f", grid.best.score) + "\n");
    } else if (*predict) {
      const SvmModel model = SvmModel::load(pr_model);
      const auto decisions = model.predict(read_features(pr_features));
      save_hypothesis(decisions_to_hypothesis(decisions, load_instances(pr_instances)), pr_out);
      emit(as_json, {{"segments", decisions.size()}}, "classified " + std::to_string(decisions.size()) + " segments\n");
    } else if (*fuse_cmd) {
      if (!fu_hyps.empty()) {
        std::vector<Hypothesis> hyps;
        for (const auto& p : fu_hyps) hyps.push_back(load_hypothesis(p));
        Hypothesis out;
        for (const auto& [conv, spans] : hyps.front()) {
          std::vector<std::vector<Decision>> votes;
          for (const auto& h : hyps) {
            const auto it = h.find(conv);
            if (it == h.end() || it->second.size() != spans.size())
              throw ValidationError("hypotheses disagree on the segments of " + conv);
            std::vector<Decision> d;
            for (std::size_t i = 0; i < spans.size(); ++i) {
              if (it->second[i].start_s != spans[i].start_s || it->second[i].end_s != spans[i].end_s)
                throw ValidationError("hypotheses disagree on the segments of " + conv);
              d.push_back({conv + "#" + std::to_string(i), it->second[i].label, it->second[i].margin});
            }
            votes.push_back(std::move(d));
          }
          const auto fused = majority_vote(votes);
          for (std::size_t i = 0; i < spans.size(); ++i)
            out[conv].push_back({spans[i].start_s, spans[i].end_s, fused[i].label, fused[i].margin});
        }
        save_hypothesis(out, fu_out);
        emit(as_json, {{"conversations", out.size()}, {"voters", hyps.size()}},
             "voted over " + std::to_string(hyps.size()) + " hypotheses\n");
      } else {
        if (fu_acoustic.empty() || fu_lexical.empty())
          throw ValidationError("fuse needs --acoustic and --lexical, or --hyp files");
        const FeatureTable f = fuse(read_features(fu_acoustic), read_features(fu_lexical));
        write_features(f, fu_out);
        emit(as_json, {{"rows", f.rows()}, {"dim", f.cols()}},
             "fused " + std::to_string(f.rows()) + " x " + std::to_string(f.cols()) + "\n");
      }
    } else if (*score_cmd) {
      AlignOptions options;
      options.gap_label = *parse_label(gap_label);
      options.score_gaps = !no_gaps;
      const auto report = score(extract_segment_pairs(load_manifest(sc_ref)).pairs, load_hypothesis(sc_hyp), options);
      if (as_json) std::cout << report.to_json() << "\n";
      else std::cout << report.summary();
    } else if (*agreement) {
      const Corpus corpus = load_manifest(ag_manifest);
      std::set<std::string> annotators;
      for (const auto& c : corpus)
        for (const auto& [a, segs] : c.tiers) annotators.insert(a);
      if (ann_a.empty() || ann_b.empty()) {
        if (annotators.size() < 2) throw ValidationError("agreement needs two annotator tiers");
        auto it = annotators.begin();
        if (ann_a.empty()) ann_a = *it++;
        else it = std::next(annotators.begin());
        if (ann_b.empty()) ann_b = *it == ann_a ? *std::next(it) : *it;
      }
      const auto A = annotation_set(corpus, ann_a), B = annotation_set(corpus, ann_b);
      const auto k = kappa_with_tolerance(A, B, tolerance);
      const auto s = segment_agreement(A, B, tolerance);
      const auto co = cooccurrence(corpus);
      json j = {{"annotators", {ann_a, ann_b}},
                {"tolerance_s", tolerance},
                {"kappa", k.kappa},
                {"percent_agreement", k.percent_agreement},
                {"onset_agreement", k.onset_agreement},
                {"table", {{"both_yes", k.both_yes}, {"both_yes_mismatch", k.both_yes_mismatch},
                           {"a_only", k.a_only}, {"b_only", k.b_only}, {"both_no", k.both_no}}},
                {"segment_agreement", s.percent},
                {"cooccurrence", co.counts}};
      std::string text = ann_a + " vs " + ann_b + " (tolerance " + fmt("%g", tolerance) + " s)\n" +
                         "kappa " + fmt("%.4f", k.kappa) + "  agreement " + fmt("%.1f%%", k.percent_agreement) +
                         "  onset agreement " + fmt("%.1f%%", k.onset_agreement) + "  segment agreement " +
                         fmt("%.1f%%", s.percent) + "\n";
      text += "co-occurrence (customer Anger/Frustration, Neutral x agent Empathy, Neutral):\n";
      for (int r = 0; r < 2; ++r)
        text += "  " + std::to_string(co.counts[r][0]) + " (" + fmt("%.2f%%", co.percent(r, 0)) + ")  " +
                std::to_string(co.counts[r][1]) + " (" + fmt("%.2f%%", co.percent(r, 1)) + ")\n";
      emit(as_json, j, text);
    } else if (*run) {
      PipelineConfig config = run_config.empty() ? PipelineConfig{} : PipelineConfig::load(run_config);
      if (config.lexicon.empty()) config.lexicon = EMPATHY_DEFAULT_LEXICON;
      if (const char* env = std::getenv("EMPATHY_WORK_DIR"); env && *env) config.work_dir = env;
      if (!run_corpus.empty()) config.corpus = run_corpus;
      if (!run_work.empty()) config.work_dir = run_work;
      if (!run_lexicon.empty()) config.lexicon = run_lexicon;
      if (run->count("--seed")) config.seed = run_seed;
      if (run->count("--vad-threshold-db")) config.vad.energy_threshold_db = vad.energy_threshold_db;
      if (run->count("--bins")) config.bins = bins;
      if (run->count("--batch")) config.select_batch = batch;
      if (run->count("--epsilon")) config.select_epsilon = epsilon;
      if (run->count("--c-grid")) config.c_grid = c_grid;
      if (run->count("--smote-percent")) config.smote_percent = smote_config.percent;
      for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ValidationError("--set expects section.key=value, got '" + o + "'");
        config.set(o.substr(0, eq), o.substr(eq + 1));
      }
      if (config.corpus.empty()) throw ValidationError("no corpus manifest given (--corpus or paths.corpus)");
      const auto report = run_pipeline(config);
      if (as_json) std::cout << report.to_json();
      else std::cout << report.summary();
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const StageError& e) {
    std::cerr << "stage " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
