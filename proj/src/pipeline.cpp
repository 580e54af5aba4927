#include "empathy/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "empathy/feature_select.hpp"
#include "empathy/random.hpp"
#include "empathy/svm.hpp"

namespace empathy {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const char* end = value.data() + value.size();
  auto res = std::from_chars(value.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ValidationError("config key " + key + ": '" + value + "' is not a number");
  return v;
}

std::size_t to_size(const std::string& key, const std::string& value) {
  std::size_t v = 0;
  const char* end = value.data() + value.size();
  auto res = std::from_chars(value.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ValidationError("config key " + key + ": '" + value + "' is not a non-negative integer");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ValidationError("config key " + key + ": '" + value + "' is not a boolean");
}

struct Field {
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
  bool is_path = false;
};

// Written paths are absolute so a saved INI does not depend on where it is stored.
std::string absolute_or_empty(const fs::path& p) {
  return p.empty() ? std::string() : fs::absolute(p).lexically_normal().string();
}

#define EMPATHY_DOUBLE(key, member)                                                      \
  {key, {[](PipelineConfig& c, const std::string& v) { c.member = to_double(key, v); }, \
         [](const PipelineConfig& c) { return format_number(c.member); }}}
#define EMPATHY_SIZE(key, member)                                                      \
  {key, {[](PipelineConfig& c, const std::string& v) { c.member = to_size(key, v); }, \
         [](const PipelineConfig& c) { return std::to_string(c.member); }}}
#define EMPATHY_STRING(key, member)                                          \
  {key, {[](PipelineConfig& c, const std::string& v) { c.member = v; }, \
         [](const PipelineConfig& c) { return c.member; }}}
#define EMPATHY_PATH(key, member)                                            \
  {key, {[](PipelineConfig& c, const std::string& v) { c.member = v; }, \
         [](const PipelineConfig& c) { return absolute_or_empty(c.member); }, true}}

// Ordered as written by to_ini.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> f = {
      EMPATHY_PATH("paths.corpus", corpus),
      EMPATHY_PATH("paths.work_dir", work_dir),
      EMPATHY_PATH("paths.lexicon", lexicon),
      EMPATHY_PATH("paths.split_file", split_file),
      EMPATHY_DOUBLE("frame.rate_fps", frame.rate_fps),
      EMPATHY_DOUBLE("frame.window_ms", frame.window_ms),
      EMPATHY_DOUBLE("frame.vq_window_ms", frame.vq_window_ms),
      EMPATHY_DOUBLE("frame.vq_sigma", frame.vq_sigma),
      EMPATHY_DOUBLE("frame.preemphasis_k", frame.preemphasis_k),
      EMPATHY_SIZE("frame.fft_size", frame.fft_size),
      EMPATHY_SIZE("frame.n_mfcc", frame.n_mfcc),
      EMPATHY_SIZE("frame.n_bands", frame.n_bands),
      EMPATHY_DOUBLE("frame.band_max_hz", frame.band_max_hz),
      {"frame.band_shape",
       {[](PipelineConfig& c, const std::string& v) {
          if (v == "triangular") c.frame.band_shape = dsp::FilterShape::Triangular;
          else if (v == "rectangular") c.frame.band_shape = dsp::FilterShape::Rectangular;
          else throw ValidationError("config key frame.band_shape: expected triangular or rectangular");
        },
        [](const PipelineConfig& c) {
          return std::string(c.frame.band_shape == dsp::FilterShape::Triangular ? "triangular" : "rectangular");
        }}},
      EMPATHY_DOUBLE("frame.min_f0_hz", frame.min_f0_hz),
      EMPATHY_DOUBLE("frame.max_f0_hz", frame.max_f0_hz),
      EMPATHY_DOUBLE("frame.voicing_threshold", frame.voicing_threshold),
      EMPATHY_DOUBLE("vad.frame_ms", vad.frame_ms),
      EMPATHY_DOUBLE("vad.hop_ms", vad.hop_ms),
      EMPATHY_DOUBLE("vad.threshold_db", vad.energy_threshold_db),
      EMPATHY_DOUBLE("vad.min_speech_ms", vad.min_speech_ms),
      EMPATHY_DOUBLE("vad.min_gap_ms", vad.min_gap_ms),
      EMPATHY_STRING("balance.bins", bins),
      EMPATHY_SIZE("balance.per_bin", per_bin_n),
      EMPATHY_SIZE("balance.smote_k", smote_k),
      EMPATHY_DOUBLE("balance.smote_percent", smote_percent),
      EMPATHY_SIZE("text.max_ngram", max_ngram),
      EMPATHY_SIZE("text.vocabulary_cap", vocabulary_cap),
      EMPATHY_SIZE("select.batch", select_batch),
      EMPATHY_DOUBLE("select.epsilon", select_epsilon),
      EMPATHY_SIZE("select.bins", discretize_bins),
      EMPATHY_SIZE("select.relief_samples", relief_samples),
      EMPATHY_DOUBLE("select.c", select_C),
      EMPATHY_STRING("train.c_grid", c_grid),
      EMPATHY_STRING("train.g_grid", g_grid),
      EMPATHY_DOUBLE("train.tol", smo_tol),
      EMPATHY_DOUBLE("split.train", train_ratio),
      EMPATHY_DOUBLE("split.dev", dev_ratio),
      EMPATHY_DOUBLE("split.test", test_ratio),
      {"score.gap_label",
       {[](PipelineConfig& c, const std::string& v) {
          const auto l = parse_label(v);
          if (!l || (*l != Label::Neutral && *l != Label::Empathy))
            throw ValidationError("config key score.gap_label: expected Neutral or Empathy");
          c.align.gap_label = *l;
        },
        [](const PipelineConfig& c) { return std::string(to_string(c.align.gap_label)); }}},
      {"score.score_gaps",
       {[](PipelineConfig& c, const std::string& v) { c.align.score_gaps = to_bool("score.score_gaps", v); },
        [](const PipelineConfig& c) { return std::string(c.align.score_gaps ? "true" : "false"); }}},
      EMPATHY_SIZE("score.baseline_trials", baseline_trials),
      {"run.seed",
       {[](PipelineConfig& c, const std::string& v) { c.seed = to_size("run.seed", v); },
        [](const PipelineConfig& c) { return std::to_string(c.seed); }}},
  };
  return f;
}

#undef EMPATHY_DOUBLE
#undef EMPATHY_SIZE
#undef EMPATHY_STRING
#undef EMPATHY_PATH

const Field* find_field(const std::string& key) {
  for (const auto& [k, f] : fields())
    if (k == key) return &f;
  return nullptr;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

template <class F>
auto run_stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::vector<int> targets(const std::vector<Instance>& instances) {
  std::vector<int> y;
  y.reserve(instances.size());
  for (const auto& i : instances) y.push_back(i.label == Label::Empathy ? 1 : -1);
  return y;
}

double empathy_share(const std::vector<Label>& labels) {
  if (labels.empty()) return 0.0;
  const auto n = std::count(labels.begin(), labels.end(), Label::Empathy);
  return static_cast<double>(n) / static_cast<double>(labels.size());
}

struct SetSpec {
  std::string name;
  KernelType kernel;
  bool normalize;
  std::vector<std::string> raw_prefixes;
  bool select;
};

json confusion_json(const WeightedConfusion& c) {
  return {{"tp", c.tp}, {"fn", c.fn}, {"fp", c.fp}, {"tn", c.tn}};
}

Hypothesis to_hypothesis(const std::vector<Instance>& instances, const std::vector<Decision>& decisions) {
  Hypothesis hyp;
  for (std::size_t i = 0; i < instances.size(); ++i)
    hyp[instances[i].conversation_id].push_back(
        {instances[i].span.start_s, instances[i].span.end_s, decisions[i].label, decisions[i].margin});
  return hyp;
}

}  // namespace

LinearCurveEvaluator::LinearCurveEvaluator(const FeatureTable& train, const FeatureTable& dev,
                                           const TrainOptions& options)
    : options_(options), y_(binary_targets(train)), y_dev_(binary_targets(dev)) {
  Normalizer norm = options.normalize ? Normalizer::fit(train.X) : Normalizer::identity(train.cols());
  if (options.normalize)
    for (std::size_t j = 0; j < train.cols(); ++j)
      for (const auto& p : options.raw_prefixes)
        if (train.schema->names[j].starts_with(p)) {
          norm.mean[j] = 0.0;
          norm.scale[j] = 1.0;
        }
  Z_ = norm.apply(train.X);
  Zd_ = norm.apply(dev.X);
  K_ = Eigen::MatrixXd::Zero(Z_.rows(), Z_.rows());
}

double LinearCurveEvaluator::operator()(std::span<const std::size_t> prefix) {
  const bool extends = prefix.size() >= used_.size() && std::equal(used_.begin(), used_.end(), prefix.begin());
  if (!extends) {
    K_.setZero();
    used_.clear();
  }
  const std::size_t from = used_.size();
  Eigen::MatrixXd B(Z_.rows(), static_cast<Eigen::Index>(prefix.size() - from));
  for (std::size_t j = from; j < prefix.size(); ++j)
    B.col(static_cast<Eigen::Index>(j - from)) = Z_.col(static_cast<Eigen::Index>(prefix[j]));
  K_.noalias() += B * B.transpose();
  used_.assign(prefix.begin(), prefix.end());

  const auto s = smo_solve(K_, y_, options_.smo);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(used_.size()));
  for (std::size_t i = 0; i < y_.size(); ++i) {
    const double ay = s.alpha[i] * y_[i];
    if (ay == 0.0) continue;
    for (std::size_t j = 0; j < used_.size(); ++j)
      w(static_cast<Eigen::Index>(j)) += ay * Z_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(used_[j]));
  }
  std::vector<int> pred(y_dev_.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double f = s.bias;
    for (std::size_t j = 0; j < used_.size(); ++j)
      f += w(static_cast<Eigen::Index>(j)) * Zd_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(used_[j]));
    pred[i] = f > 0.0 ? 1 : -1;
  }
  return instance_ua(pred, y_dev_);
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  PipelineConfig c;
  const fs::path base = path.parent_path();
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ValidationError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const Field* f = find_field(full);
      if (!f) throw ValidationError("config: unknown key '" + full + "'");
      std::string v = value.get_value<std::string>();
      if (f->is_path && !v.empty() && fs::path(v).is_relative()) v = (base / v).lexically_normal().string();
      f->set(c, v);
    }
  }
  return c;
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) throw ValidationError("config: unknown key '" + key + "'");
  f->set(*this, value);
}

std::string PipelineConfig::to_ini() const {
  std::string out, section;
  for (const auto& [key, f] : fields()) {
    const auto dot = key.find('.');
    const std::string s = key.substr(0, dot);
    if (s != section) {
      out += (section.empty() ? "[" : "\n[") + s + "]\n";
      section = s;
    }
    out += key.substr(dot + 1) + " = " + f.get(*this) + "\n";
  }
  return out;
}

void PipelineConfig::validate() const {
  frame.validate();
  vad.validate();
  if (std::abs(train_ratio + dev_ratio + test_ratio - 1.0) > 1e-9)
    throw ValidationError("split ratios must sum to 1");
  if (train_ratio <= 0.0 || dev_ratio <= 0.0 || test_ratio <= 0.0)
    throw ValidationError("split ratios must be positive");
  if (per_bin_n == 0) throw ValidationError("balance.per_bin must be at least 1");
  SmoteConfig{smote_k, smote_percent, seed}.validate();
  if (max_ngram == 0 || vocabulary_cap == 0) throw ValidationError("text settings must be positive");
  if (select_batch == 0) throw ValidationError("select.batch must be positive");
  if (discretize_bins < 2) throw ValidationError("select.bins must be at least 2");
  if (!(select_C > 0.0) || !(smo_tol > 0.0)) throw ValidationError("select.c and train.tol must be positive");
  parse_grid(c_grid);
  parse_grid(g_grid);
}

Splits split_corpus(const Corpus& corpus, const PipelineConfig& config) {
  if (!config.split_file.empty()) {
    auto s = load_splits(config.split_file);
    validate_splits(corpus, s);
    return s;
  }
  std::map<std::string, std::vector<std::string>> by_speaker;
  for (const auto& c : corpus) by_speaker[c.speaker_id.empty() ? c.id : c.speaker_id].push_back(c.id);
  std::vector<std::string> speakers;
  for (const auto& [s, ids] : by_speaker) speakers.push_back(s);
  Rng rng(derive_seed(config.seed, "split"));
  for (std::size_t i = speakers.size(); i > 1; --i) std::swap(speakers[i - 1], speakers[uniform_index(rng, i)]);

  const double n = static_cast<double>(corpus.size());
  const auto n_train = static_cast<std::size_t>(std::llround(config.train_ratio * n));
  const auto n_dev = static_cast<std::size_t>(std::llround(config.dev_ratio * n));
  Splits s;
  for (const auto& spk : speakers) {
    auto& target = s.train.size() < n_train ? s.train : s.dev.size() < n_dev ? s.dev : s.test;
    for (const auto& id : by_speaker[spk]) target.push_back(id);
  }
  for (auto* v : {&s.train, &s.dev, &s.test}) std::sort(v->begin(), v->end());
  validate_splits(corpus, s);
  return s;
}

void validate_splits(const Corpus& corpus, const Splits& splits) {
  std::unordered_map<std::string, const Conversation*> by_id;
  for (const auto& c : corpus) by_id.emplace(c.id, &c);
  std::map<std::string, std::string> speaker_split;
  std::set<std::string> seen;
  const std::pair<const char*, const std::vector<std::string>*> parts[] = {
      {"train", &splits.train}, {"dev", &splits.dev}, {"test", &splits.test}};
  for (const auto& [name, ids] : parts)
    for (const auto& id : *ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw ValidationError("split lists unknown conversation '" + id + "'");
      if (!seen.insert(id).second) throw ValidationError("conversation '" + id + "' appears in two splits");
      const std::string spk = it->second->speaker_id.empty() ? id : it->second->speaker_id;
      const auto [pos, inserted] = speaker_split.emplace(spk, name);
      if (!inserted && pos->second != name)
        throw ValidationError("speaker '" + spk + "' appears in both " + pos->second + " and " + name +
                              " (conversation '" + id + "')");
    }
}

Splits load_splits(const fs::path& path) {
  try {
    const auto j = json::parse(read_text(path));
    Splits s;
    s.train = j.at("train").get<std::vector<std::string>>();
    s.dev = j.at("dev").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_splits(const Splits& splits, const fs::path& path) {
  write_text(path, json{{"train", splits.train}, {"dev", splits.dev}, {"test", splits.test}}.dump(1) + "\n");
}

std::vector<Instance> make_instances(const SegmentPair& pair, const std::vector<Span>& speech,
                                     double min_length_s) {
  const double t_i = pair.empathy.start_s, t_e = pair.empathy.end_s;
  std::vector<Instance> out;
  auto add = [&](double a, double b, Label label) {
    if (b - a < min_length_s) return;
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%04zu", out.size());
    out.push_back({pair.conversation_id + buf, pair.conversation_id, {a, b}, label});
  };
  for (const auto& s : speech) {
    const double a = std::max(s.start_s, 0.0), b = std::min(s.end_s, t_e);
    if (b <= a) continue;
    if (a < t_i && b > t_i) {
      add(a, t_i, Label::Neutral);
      add(t_i, b, Label::Empathy);
    } else {
      add(a, b, a < t_i ? Label::Neutral : Label::Empathy);
    }
  }
  return out;
}

void save_instances(const std::vector<Instance>& instances, const fs::path& path) {
  json arr = json::array();
  for (const auto& i : instances)
    arr.push_back({{"id", i.id},
                   {"conversation_id", i.conversation_id},
                   {"start_s", i.span.start_s},
                   {"end_s", i.span.end_s},
                   {"label", to_string(i.label)}});
  write_text(path, arr.dump(1) + "\n");
}

std::vector<Instance> load_instances(const fs::path& path) {
  std::vector<Instance> out;
  try {
    for (const auto& j : json::parse(read_text(path))) {
      Instance i;
      i.id = j.at("id").get<std::string>();
      i.conversation_id = j.at("conversation_id").get<std::string>();
      i.span = {j.at("start_s").get<double>(), j.at("end_s").get<double>()};
      const auto label = parse_label(j.at("label").get<std::string>());
      if (!label) throw ValidationError(path.string() + ": unknown label in instance " + i.id);
      i.label = *label;
      out.push_back(std::move(i));
    }
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return out;
}

FeatureTable acoustic_table(const Corpus& corpus, const std::vector<Instance>& instances,
                            const FrameConfig& config) {
  std::unordered_map<std::string, const Conversation*> by_id;
  for (const auto& c : corpus) by_id.emplace(c.id, &c);
  AcousticExtractor extractor(config);
  FeatureTable table;
  table.schema = extractor.schema();
  table.X.resize(0, static_cast<Eigen::Index>(table.cols()));
  std::string loaded;
  Audio audio;
  std::vector<std::vector<double>> rows;
  rows.reserve(instances.size());
  for (const auto& inst : instances) {
    if (inst.conversation_id != loaded) {
      const auto it = by_id.find(inst.conversation_id);
      if (it == by_id.end()) throw ValidationError("unknown conversation '" + inst.conversation_id + "'");
      audio = read_wav(it->second->agent_wav);
      loaded = inst.conversation_id;
    }
    rows.push_back(extractor.features(audio, inst.span));
  }
  table.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.cols()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      table.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    table.ids.push_back(instances[i].id);
    table.labels.push_back(instances[i].label);
    table.durations.push_back(instances[i].span.length());
  }
  return table;
}

std::vector<std::vector<std::string>> instance_tokens(const Corpus& corpus,
                                                      const std::vector<Instance>& instances) {
  std::unordered_map<std::string, const Conversation*> by_id;
  for (const auto& c : corpus) by_id.emplace(c.id, &c);
  std::vector<std::vector<std::string>> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    const auto it = by_id.find(inst.conversation_id);
    if (it == by_id.end()) throw ValidationError("unknown conversation '" + inst.conversation_id + "'");
    out.push_back(tokenize(transcript_text(*it->second, Channel::Agent, inst.span)));
  }
  return out;
}

FeatureTable lexical_table(const std::vector<Instance>& instances,
                           const std::vector<std::vector<std::string>>& tokens, const Vocabulary& vocab) {
  FeatureTable table;
  table.schema = lexical_schema(vocab);
  table.X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(instances.size()),
                                  static_cast<Eigen::Index>(table.cols()));
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (const auto& [j, v] : tfidf_vector(tokens[i], vocab))
      table.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    table.ids.push_back(instances[i].id);
    table.labels.push_back(instances[i].label);
    table.durations.push_back(instances[i].span.length());
  }
  return table;
}

FeatureTable psycho_table(const std::vector<Instance>& instances,
                          const std::vector<std::vector<std::string>>& tokens, const LexiconDict& dict) {
  FeatureTable table;
  table.schema = psycho_schema(dict);
  table.X.resize(0, static_cast<Eigen::Index>(table.cols()));
  for (std::size_t i = 0; i < instances.size(); ++i)
    table.append(instances[i].id, instances[i].label, instances[i].span.length(),
                 psycho_features(tokens[i], dict));
  return table;
}

std::string oversample(FeatureTable& table, const SmoteConfig& config) {
  std::vector<std::size_t> minority;
  for (std::size_t i = 0; i < table.rows(); ++i)
    if (table.labels[i] == Label::Empathy) minority.push_back(i);
  const FeatureTable m = table.subset(minority);
  const SmoteResult r = smote(m.X, config);
  for (std::size_t k = 0; k < r.provenance.size(); ++k) {
    const Eigen::VectorXd row = r.X.row(static_cast<Eigen::Index>(k)).transpose();
    table.append("smote:" + std::to_string(k), Label::Empathy, m.durations[r.provenance[k].seed_index],
                 std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
  }
  return smote_audit_json(r, config, m.ids);
}

const SystemResult& PipelineReport::system(const std::string& name) const {
  for (const auto& s : systems)
    if (s.name == name) return s;
  throw ValidationError("report has no system '" + name + "'");
}

std::string PipelineReport::to_json() const {
  json j;
  j["counts"] = counts;
  j["minority_share"] = {{"initial", minority_trajectory.size() > 0 ? minority_trajectory[0] : 0.0},
                         {"undersampled", minority_trajectory.size() > 1 ? minority_trajectory[1] : 0.0},
                         {"oversampled", minority_trajectory.size() > 2 ? minority_trajectory[2] : 0.0}};
  auto& sys = j["systems"] = json::array();
  for (const auto& s : systems)
    sys.push_back({{"name", s.name},
                   {"kernel", s.kernel},
                   {"input_dim", s.input_dim},
                   {"selected_dim", s.selected_dim},
                   {"C", s.C},
                   {"G", s.gamma},
                   {"dev_ua", s.dev_ua},
                   {"test_ua", s.test_ua},
                   {"confusion_s", confusion_json(s.confusion)}});
  j["random_baseline"] = {{"prior", baseline_prior},
                          {"trials", baseline_trials},
                          {"mean_ua", baseline_mean},
                          {"std_ua", baseline_std}};
  auto& sig = j["mcnemar"] = json::object();
  for (const auto& [k, m] : significance)
    sig[k] = {{"b", m.b}, {"c", m.c}, {"n", m.n}, {"chi2", m.chi2}, {"p", m.p}, {"phi", m.phi}};
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

std::string PipelineReport::summary() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %-9s %7s %7s %9s %9s %8s\n", "system", "kernel", "dim",
                "sel", "C", "G", "UA");
  out << line;
  for (const auto& s : systems) {
    std::snprintf(line, sizeof line, "%-14s %-9s %7zu %7zu %9.0e %9.0e %8.3f\n", s.name.c_str(),
                  s.kernel.c_str(), s.input_dim, s.selected_dim, s.C, s.gamma, s.test_ua);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-14s %-9s %7s %7s %9s %9s %8.3f (sd %.3f, %zu trials)\n",
                "random", "-", "-", "-", "-", "-", baseline_mean, baseline_std, baseline_trials);
  out << line;
  if (minority_trajectory.size() == 3) {
    std::snprintf(line, sizeof line, "train Empathy share: %.1f%% -> %.1f%% -> %.1f%%\n",
                  100 * minority_trajectory[0], 100 * minority_trajectory[1], 100 * minority_trajectory[2]);
    out << line;
  }
  for (const auto& w : warnings) out << "warning: " << w << "\n";
  return out.str();
}

PipelineReport run_pipeline(const PipelineConfig& config) {
  config.validate();
  const fs::path work = config.work_dir;
  PipelineReport report;

  // inputs: validation errors pass through unchanged
  const Corpus corpus = load_manifest(config.corpus);
  const LexiconDict lexicon = LexiconDict::load(config.lexicon);
  const auto extraction = extract_segment_pairs(corpus);
  for (const auto& id : extraction.skipped_ids)
    report.warnings.push_back("conversation " + id + " skipped: empathy onset at 0");
  std::map<std::string, SegmentPair> pair_of;
  for (const auto& p : extraction.pairs) pair_of.emplace(p.conversation_id, p);
  Corpus usable;
  for (const auto& c : corpus)
    if (pair_of.count(c.id)) usable.push_back(c);
  if (usable.empty()) throw ValidationError("corpus has no conversation with an Empathy segment");

  const Splits splits = split_corpus(usable, config);
  if (splits.train.empty() || splits.dev.empty() || splits.test.empty())
    throw ValidationError("every split needs at least one conversation");
  fs::create_directories(work);
  write_text(work / "config.ini", config.to_ini());
  save_splits(splits, work / "splits.json");
  report.counts["conversations"] = usable.size();
  report.counts["train_conversations"] = splits.train.size();
  report.counts["dev_conversations"] = splits.dev.size();
  report.counts["test_conversations"] = splits.test.size();

  const double min_len = AcousticExtractor(config.frame).min_duration_s();
  std::map<std::string, std::vector<Instance>> inst;
  run_stage("segment", [&] {
    std::unordered_map<std::string, const Conversation*> by_id;
    for (const auto& c : usable) by_id.emplace(c.id, &c);
    json speech = json::object();
    for (const auto& [name, ids] : {std::pair{"train", &splits.train}, {"dev", &splits.dev}, {"test", &splits.test}}) {
      auto& out = inst[name];
      for (const auto& id : *ids) {
        const auto spans = segment_speech(read_wav(by_id.at(id)->agent_wav), config.vad);
        speech[id] = json::parse(spans_to_json(spans));
        const auto v = make_instances(pair_of.at(id), spans, min_len);
        out.insert(out.end(), v.begin(), v.end());
      }
      save_instances(out, work / "instances" / (std::string(name) + ".json"));
    }
    write_text(work / "instances" / "speech_spans.json", speech.dump(1) + "\n");
  });
  for (const char* s : {"train", "dev", "test"}) report.counts[std::string(s) + "_instances"] = inst[s].size();

  std::vector<Instance> train_kept;
  run_stage("undersample", [&] {
    std::vector<std::size_t> neutral;
    std::vector<double> durations;
    std::size_t n_min = 0;
    for (std::size_t i = 0; i < inst["train"].size(); ++i) {
      if (inst["train"][i].label == Label::Empathy) {
        ++n_min;
      } else {
        neutral.push_back(i);
        durations.push_back(inst["train"][i].span.length());
      }
    }
    if (n_min == 0 || neutral.empty()) throw ValidationError("training split needs both classes");
    const BinSpec bins = parse_bin_spec(config.bins, durations, n_min, config.per_bin_n);
    const auto keep = binned_undersample(durations, bins, derive_seed(config.seed, "undersample"));
    std::vector<bool> kept(inst["train"].size(), false);
    for (std::size_t i = 0; i < inst["train"].size(); ++i) kept[i] = inst["train"][i].label == Label::Empathy;
    for (auto k : keep) kept[neutral[k]] = true;
    for (std::size_t i = 0; i < kept.size(); ++i)
      if (kept[i]) train_kept.push_back(inst["train"][i]);
    save_instances(train_kept, work / "instances" / "train_balanced.json");
    write_text(work / "balance" / "bins.json",
               json{{"spec", config.bins}, {"edges", bins.edges}, {"per_bin_n", bins.per_bin_n}}.dump(1) + "\n");
  });
  report.counts["train_balanced_instances"] = train_kept.size();
  {
    std::vector<Label> before, after;
    for (const auto& i : inst["train"]) before.push_back(i.label);
    for (const auto& i : train_kept) after.push_back(i.label);
    report.minority_trajectory = {empathy_share(before), empathy_share(after)};
  }

  // tables[set][split], read back from disk so later stages see persisted values
  std::map<std::string, std::map<std::string, FeatureTable>> tables;
  run_stage("extract", [&] {
    const std::map<std::string, const std::vector<Instance>*> parts = {
        {"train", &train_kept}, {"dev", &inst["dev"]}, {"test", &inst["test"]}};
    std::map<std::string, std::vector<std::vector<std::string>>> tokens;
    for (const auto& [name, v] : parts) tokens[name] = instance_tokens(usable, *v);
    fs::create_directories(work / "features");
    const Vocabulary vocab = Vocabulary::build(tokens["train"], config.max_ngram, config.vocabulary_cap);
    vocab.save(work / "features" / "vocabulary.tsv");
    write_text(work / "features" / "frame_config.json", config.frame.to_json() + "\n");
    for (const auto& [name, v] : parts) {
      const fs::path a = work / "features" / ("acoustic_" + name + ".csv");
      const fs::path l = work / "features" / ("lexical_" + name + ".svec");
      const fs::path p = work / "features" / ("psycho_" + name + ".csv");
      write_features(acoustic_table(usable, *v, config.frame), a);
      write_features(lexical_table(*v, tokens[name], vocab), l);
      write_features(psycho_table(*v, tokens[name], lexicon), p);
      tables["acoustic"][name] = read_feature_csv(a, "acoustic");
      tables["lexical"][name] = read_sparse(l);
      tables["psycho"][name] = read_feature_csv(p, "psycho");
      tables["fused"][name] = fuse(tables["acoustic"][name], tables["lexical"][name]);
    }
  });

  const std::vector<SetSpec> sets = {{"acoustic", KernelType::Linear, true, {}, true},
                                     {"lexical", KernelType::Linear, false, {}, true},
                                     {"psycho", KernelType::Gaussian, true, {}, false},
                                     {"fused", KernelType::Linear, true, {"ng:"}, true}};

  run_stage("oversample", [&] {
    for (const auto& s : sets) {
      const SmoteConfig sc{config.smote_k, config.smote_percent, derive_seed(config.seed, "smote/" + s.name)};
      write_text(work / "balance" / ("smote_" + s.name + ".json"), oversample(tables[s.name]["train"], sc) + "\n");
    }
  });
  report.minority_trajectory.push_back(empathy_share(tables["acoustic"]["train"].labels));
  report.counts["train_oversampled_instances"] = tables["acoustic"]["train"].rows();

  const auto Cs = parse_grid(config.c_grid);
  const auto Gs = parse_grid(config.g_grid);
  std::map<std::string, std::vector<Decision>> decisions;
  std::vector<SegmentPair> test_pairs;
  for (const auto& id : splits.test) test_pairs.push_back(pair_of.at(id));

  for (const auto& s : sets) {
    const FeatureTable& train = tables[s.name]["train"];
    const FeatureTable& dev = tables[s.name]["dev"];
    const FeatureTable& test = tables[s.name]["test"];
    TrainOptions options;
    options.kernel.type = s.kernel;
    options.normalize = s.normalize;
    options.raw_prefixes = s.raw_prefixes;
    options.smo.tol = config.smo_tol;
    options.smo.seed = derive_seed(config.seed, "smo/" + s.name);

    std::vector<std::size_t> columns(train.cols());
    for (std::size_t j = 0; j < columns.size(); ++j) columns[j] = j;
    if (s.select) {
      run_stage("select", [&] {
        const auto disc = fit_discretizers(dev.X, config.discretize_bins);
        const auto weights = relief_weights(discretize(dev.X, disc), binary_targets(dev), config.relief_samples,
                                            derive_seed(config.seed, "relief/" + s.name));
        TrainOptions curve_options = options;
        curve_options.smo.C = config.select_C;
        LinearCurveEvaluator evaluate(train, dev, curve_options);
        const auto curve = learning_curve_select(
            weights.ranking, config.select_batch, config.select_epsilon,
            [&](std::span<const std::size_t> prefix) { return evaluate(prefix); }, binary_targets(dev));
        for (const auto& w : curve.warnings) report.warnings.push_back(s.name + ": " + w);
        fs::create_directories(work / "select");
        std::ofstream curve_out(work / "select" / (s.name + "_curve.csv"));
        write_learning_curve_csv(curve, curve_out);
        std::string list;
        for (std::size_t i = 0; i < weights.ranking.size(); ++i) {
          const auto c = weights.ranking[i];
          list += train.schema->names[c] + "\t" + format_number(weights.weights[c]) +
                  (i < curve.selected_k ? "\tselected\n" : "\n");
        }
        write_text(work / "select" / (s.name + "_ranking.tsv"), list);
        columns = curve.selected;
      });
    }

    SystemResult r;
    r.name = s.name;
    r.kernel = s.kernel == KernelType::Linear ? "linear" : "gaussian";
    r.input_dim = train.cols();
    r.selected_dim = columns.size();
    const auto grid = run_stage("tune", [&] {
      return grid_tune(train, dev, options, Cs, s.kernel == KernelType::Gaussian ? Gs : std::vector<double>{}, columns);
    });
    r.C = grid.best.C;
    r.gamma = grid.best.gamma;
    r.dev_ua = grid.best.score;
    {
      json g = json::array();
      for (const auto& p : grid.points) g.push_back({{"C", p.C}, {"G", p.gamma}, {"dev_ua", p.score}});
      write_text(work / "models" / (s.name + "_grid.json"), g.dump(1) + "\n");
    }
    const SvmModel model = run_stage("train", [&] {
      TrainOptions final_options = options;
      final_options.smo.C = grid.best.C;
      final_options.kernel.gamma = s.kernel == KernelType::Gaussian ? grid.best.gamma : 1.0;
      auto m = smo_train(concat_rows(train, dev), final_options, columns);
      fs::create_directories(work / "models");
      m.save(work / "models" / (s.name + ".json"));
      return SvmModel::load(work / "models" / (s.name + ".json"));
    });
    if (!model.converged) report.warnings.push_back(s.name + ": SMO stopped at the step limit");
    decisions[s.name] = run_stage("predict", [&] { return model.predict(test); });
    const auto scored = run_stage("score", [&] {
      const auto hyp = to_hypothesis(inst["test"], decisions[s.name]);
      fs::create_directories(work / "hyp");
      save_hypothesis(hyp, work / "hyp" / (s.name + ".json"));
      return score(test_pairs, hyp, config.align);
    });
    r.test_ua = scored.ua;
    r.confusion = scored.pooled;
    report.systems.push_back(r);
  }

  run_stage("fuse", [&] {
    decisions["majority_vote"] = majority_vote({decisions["acoustic"], decisions["lexical"], decisions["psycho"]});
    const auto hyp = to_hypothesis(inst["test"], decisions["majority_vote"]);
    save_hypothesis(hyp, work / "hyp" / "majority_vote.json");
    const auto scored = score(test_pairs, hyp, config.align);
    SystemResult r;
    r.name = "majority_vote";
    r.kernel = "vote";
    r.test_ua = scored.ua;
    r.confusion = scored.pooled;
    report.systems.push_back(r);

    std::vector<Label> refs;
    for (const auto& i : inst["test"]) refs.push_back(i.label);
    auto labels_of = [](const std::vector<Decision>& d) {
      std::vector<Label> out;
      for (const auto& x : d) out.push_back(x.label);
      return out;
    };
    const auto vote = labels_of(decisions["majority_vote"]);
    for (const char* s : {"acoustic", "lexical", "psycho", "fused"})
      report.significance[std::string("majority_vote~") + s] = mcnemar(vote, labels_of(decisions[s]), refs);
  });

  run_stage("baseline", [&] {
    const FeatureTable& tr = tables["acoustic"]["train"];
    const FeatureTable& dv = tables["acoustic"]["dev"];
    std::vector<Label> all(tr.labels);
    all.insert(all.end(), dv.labels.begin(), dv.labels.end());
    report.baseline_prior = empathy_share(all);
    std::vector<double> weights;
    for (const auto& i : inst["test"]) weights.push_back(i.span.length());
    const auto b = random_baseline(report.baseline_prior, targets(inst["test"]), weights,
                                   derive_seed(config.seed, "baseline"), config.baseline_trials);
    report.baseline_mean = b.mean;
    report.baseline_std = b.stddev;
    report.baseline_trials = config.baseline_trials;
  });

  const std::string text = report.to_json();
  write_text(work / "report.json", text);
  json prov = {{"tool", "empathy 0.1.0"},
               {"manifest", fs::absolute(config.corpus).lexically_normal().string()},
               {"manifest_fnv1a", fnv1a(read_text(config.corpus))},
               {"lexicon", fs::absolute(config.lexicon).lexically_normal().string()},
               {"lexicon_fnv1a", fnv1a(read_text(config.lexicon))},
               {"config", config.to_ini()},
               {"report_fnv1a", fnv1a(text)}};
  write_text(work / "provenance.json", prov.dump(1) + "\n");
  return report;
}

}  // namespace empathy
