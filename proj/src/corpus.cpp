#include "empathy/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "empathy/wav.hpp"

namespace empathy {

using nlohmann::json;

namespace {

// One analysis frame; also the tolerance for channel duration mismatch.
constexpr double kFrameSeconds = 0.010;

double round_ms(double seconds) { return std::round(seconds * 1000.0) / 1000.0; }
long long to_ms(double seconds) { return std::llround(seconds * 1000.0); }

ValidationError conv_error(const std::string& id, const std::string& what) {
  return ValidationError("conversation '" + id + "': " + what);
}

const json& require(const json& obj, const char* key, const std::string& id) {
  auto it = obj.find(key);
  if (it == obj.end()) throw conv_error(id, std::string("missing field '") + key + "'");
  return *it;
}

Segment parse_segment(const json& j, const std::string& id) {
  Segment s;
  const auto channel = parse_channel(require(j, "channel", id).get<std::string>());
  if (!channel) throw conv_error(id, "unknown channel " + j["channel"].dump());
  const auto label = parse_label(require(j, "label", id).get<std::string>());
  if (!label) throw conv_error(id, "unknown label " + j["label"].dump());
  s.channel = *channel;
  s.label = *label;
  s.start_s = round_ms(require(j, "start_s", id).get<double>());
  s.end_s = round_ms(require(j, "end_s", id).get<double>());
  return s;
}

std::optional<Segment> first_onset(const std::vector<Segment>& segments, Label label) {
  std::optional<Segment> best;
  for (const auto& s : segments) {
    if (s.label != label) continue;
    if (!best || s.start_s < best->start_s) best = s;
  }
  return best;
}

}  // namespace

const std::vector<Segment>& Conversation::reference_tier() const {
  static const std::vector<Segment> empty;
  return tiers.empty() ? empty : tiers.begin()->second;
}

std::vector<Segment> Conversation::segments(const std::string& annotator,
                                            Channel channel) const {
  std::vector<Segment> out;
  auto it = tiers.find(annotator);
  if (it == tiers.end()) return out;
  for (const auto& s : it->second)
    if (s.channel == channel) out.push_back(s);
  return out;
}

void validate_conversation(const Conversation& c) {
  for (const auto& [annotator, segments] : c.tiers) {
    for (Channel ch : {Channel::Agent, Channel::Customer}) {
      const Segment* prev = nullptr;
      for (const auto& s : segments) {
        if (s.channel != ch) continue;
        if (!(s.end_s > s.start_s))
          throw conv_error(c.id, "tier '" + annotator + "' has a segment with end <= start at " +
                                     std::to_string(s.start_s));
        if (s.start_s < 0.0 || (c.duration_s > 0.0 && s.end_s > c.duration_s + 1e-3))
          throw conv_error(c.id, "tier '" + annotator + "' segment [" + std::to_string(s.start_s) +
                                     ", " + std::to_string(s.end_s) + "] is out of range [0, " +
                                     std::to_string(c.duration_s) + "]");
        if (!label_allowed_on(s.label, s.channel))
          throw conv_error(c.id, "label " + std::string(to_string(s.label)) + " on " +
                                     std::string(to_string(s.channel)) + " channel");
        if (prev && s.start_s < prev->end_s)
          throw conv_error(c.id, "tier '" + annotator + "' has overlapping segments at " +
                                     std::to_string(s.start_s));
        prev = &s;
      }
    }
  }
}

Corpus load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("manifest " + path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw ValidationError("manifest must be a JSON array of conversations");

  const auto base = path.parent_path();
  Corpus corpus;
  std::set<std::string> seen;
  for (const auto& j : doc) {
    Conversation c;
    c.id = j.value("id", std::string{});
    if (c.id.empty()) throw ValidationError("conversation without an id in " + path.string());
    if (!seen.insert(c.id).second) throw conv_error(c.id, "duplicate id");
    c.speaker_id = j.value("speaker_id", c.id);
    try {
      c.agent_wav = base / require(j, "agent_wav", c.id).get<std::string>();
      c.customer_wav = base / require(j, "customer_wav", c.id).get<std::string>();
      if (auto t = j.find("tiers"); t != j.end()) {
        for (const auto& [annotator, list] : t->items()) {
          auto& tier = c.tiers[annotator];
          for (const auto& s : list) tier.push_back(parse_segment(s, c.id));
          std::stable_sort(tier.begin(), tier.end(), [](const Segment& x, const Segment& y) {
            if (x.channel != y.channel) return x.channel < y.channel;
            return x.start_s < y.start_s;
          });
        }
      }
      if (auto t = j.find("transcripts"); t != j.end()) {
        for (const auto& [name, list] : t->items()) {
          const auto channel = parse_channel(name);
          if (!channel) throw conv_error(c.id, "unknown transcript channel '" + name + "'");
          auto& entries = c.transcripts[*channel];
          for (const auto& e : list)
            entries.push_back({round_ms(require(e, "start_s", c.id).get<double>()),
                               round_ms(require(e, "end_s", c.id).get<double>()),
                               require(e, "text", c.id).get<std::string>()});
          std::stable_sort(entries.begin(), entries.end(),
                           [](const auto& x, const auto& y) { return x.start_s < y.start_s; });
        }
      }
    } catch (const json::exception& e) {
      throw conv_error(c.id, e.what());
    }

    for (const auto* wav : {&c.agent_wav, &c.customer_wav})
      if (!std::filesystem::exists(*wav))
        throw conv_error(c.id, "audio file not found: " + wav->string());
    WavInfo agent, customer;
    try {
      agent = read_wav_info(c.agent_wav);
      customer = read_wav_info(c.customer_wav);
    } catch (const ValidationError& e) {
      throw conv_error(c.id, e.what());
    }
    if (std::abs(agent.duration() - customer.duration()) > kFrameSeconds)
      throw conv_error(c.id, "agent and customer audio durations differ by more than one frame");
    c.duration_s = agent.duration();
    validate_conversation(c);
    corpus.push_back(std::move(c));
  }
  return corpus;
}

void save_manifest(const Corpus& corpus, const std::filesystem::path& path) {
  const auto base = path.parent_path();
  auto rel = [&](const std::filesystem::path& p) {
    if (base.empty()) return p.generic_string();
    auto r = std::filesystem::relative(p, base);
    return (r.empty() ? p : r).generic_string();
  };
  json doc = json::array();
  for (const auto& c : corpus) {
    json j;
    j["id"] = c.id;
    j["speaker_id"] = c.speaker_id;
    j["agent_wav"] = rel(c.agent_wav);
    j["customer_wav"] = rel(c.customer_wav);
    json tiers = json::object();
    for (const auto& [annotator, segments] : c.tiers) {
      json list = json::array();
      for (const auto& s : segments)
        list.push_back({{"channel", to_string(s.channel)},
                        {"start_s", round_ms(s.start_s)},
                        {"end_s", round_ms(s.end_s)},
                        {"label", to_string(s.label)}});
      tiers[annotator] = std::move(list);
    }
    j["tiers"] = std::move(tiers);
    json transcripts = json::object();
    for (const auto& [channel, entries] : c.transcripts) {
      json list = json::array();
      for (const auto& e : entries)
        list.push_back({{"start_s", round_ms(e.start_s)}, {"end_s", round_ms(e.end_s)},
                        {"text", e.text}});
      transcripts[std::string(to_string(channel))] = std::move(list);
    }
    j["transcripts"] = std::move(transcripts);
    doc.push_back(std::move(j));
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write manifest " + path.string());
  out << doc.dump(1) << '\n';
}

PairExtraction extract_segment_pairs(const Corpus& corpus,
                                     const std::optional<std::string>& annotator) {
  PairExtraction result;
  for (const auto& c : corpus) {
    const std::vector<Segment>* tier = nullptr;
    if (annotator) {
      auto it = c.tiers.find(*annotator);
      if (it == c.tiers.end()) continue;
      tier = &it->second;
    } else {
      tier = &c.reference_tier();
    }
    std::vector<Segment> agent;
    for (const auto& s : *tier)
      if (s.channel == Channel::Agent) agent.push_back(s);
    const auto onset = first_onset(agent, Label::Empathy);
    if (!onset) continue;
    if (onset->start_s <= 0.0) {
      std::cerr << "warning: conversation '" << c.id
                << "' skipped: first Empathy segment starts at 0 (no neutral context)\n";
      result.skipped_ids.push_back(c.id);
      continue;
    }
    SegmentPair pair;
    pair.conversation_id = c.id;
    pair.empathy = *onset;
    pair.neutral = Segment{Channel::Agent, 0.0, onset->start_s, Label::Neutral};
    result.pairs.push_back(pair);
  }
  std::sort(result.pairs.begin(), result.pairs.end(),
            [](const auto& a, const auto& b) { return a.conversation_id < b.conversation_id; });
  std::sort(result.skipped_ids.begin(), result.skipped_ids.end());
  return result;
}

long CooccurrenceTable::total() const {
  return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
}

double CooccurrenceTable::percent(int row, int col) const {
  const long n = total();
  return n == 0 ? 0.0 : 100.0 * static_cast<double>(counts[row][col]) / static_cast<double>(n);
}

CooccurrenceTable cooccurrence_from_counts(long emp_af, long neu_af, long emp_neu, long neu_neu) {
  CooccurrenceTable t;
  t.counts = {{{emp_af, neu_af}, {emp_neu, neu_neu}}};
  return t;
}

CooccurrenceTable cooccurrence(const Corpus& corpus, const std::optional<std::string>& annotator) {
  CooccurrenceTable table;
  for (const auto& c : corpus) {
    const std::vector<Segment>* tier = &c.reference_tier();
    if (annotator) {
      auto it = c.tiers.find(*annotator);
      static const std::vector<Segment> empty;
      tier = it == c.tiers.end() ? &empty : &it->second;
    }
    bool empathy = false;
    bool upset = false;
    for (const auto& s : *tier) {
      if (s.channel == Channel::Agent && s.label == Label::Empathy) empathy = true;
      if (s.channel == Channel::Customer &&
          (s.label == Label::Anger || s.label == Label::Frustration))
        upset = true;
    }
    ++table.counts[upset ? 0 : 1][empathy ? 0 : 1];
  }
  return table;
}

AnnotationSet annotation_set(const Corpus& corpus, const std::string& annotator) {
  AnnotationSet set;
  for (const auto& c : corpus) {
    auto it = c.tiers.find(annotator);
    set[c.id] = it == c.tiers.end() ? std::vector<Segment>{} : it->second;
  }
  return set;
}

double cohen_kappa(double both_yes, double a_only, double b_only, double both_no) {
  const double n = both_yes + a_only + b_only + both_no;
  if (n <= 0.0) throw ValidationError("kappa is undefined for an empty annotation set");
  const double po = (both_yes + both_no) / n;
  const double a_yes = (both_yes + a_only) / n;
  const double b_yes = (both_yes + b_only) / n;
  const double pe = a_yes * b_yes + (1.0 - a_yes) * (1.0 - b_yes);
  if (pe >= 1.0) {
    if (po >= 1.0) return 1.0;
    throw ValidationError("kappa is undefined: chance agreement is 1 but observed agreement is not");
  }
  return (po - pe) / (1.0 - pe);
}

KappaResult kappa_with_tolerance(const AnnotationSet& a, const AnnotationSet& b,
                                 double tolerance_s, Label label) {
  if (tolerance_s < 0.0) throw ValidationError("tolerance must be >= 0");
  if (a.empty() || b.empty()) throw ValidationError("kappa is undefined for an empty tier set");
  if (a.size() != b.size() ||
      !std::equal(a.begin(), a.end(), b.begin(),
                  [](const auto& x, const auto& y) { return x.first == y.first; }))
    throw ValidationError("tiers do not cover the same conversations");

  const long long tol_ms = to_ms(tolerance_s);
  KappaResult r;
  long exact = 0;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    const auto oa = first_onset(ia->second, label);
    const auto ob = first_onset(ib->second, label);
    if (oa && ob) {
      const long long diff = std::llabs(to_ms(oa->start_s) - to_ms(ob->start_s));
      if (diff <= tol_ms)
        ++r.both_yes;
      else
        ++r.both_yes_mismatch;
      if (diff == 0) ++exact;
    } else if (oa) {
      ++r.a_only;
    } else if (ob) {
      ++r.b_only;
    } else {
      ++r.both_no;
    }
  }
  const double n = static_cast<double>(a.size());
  const double po = static_cast<double>(r.both_yes + r.both_no) / n;
  const double a_yes = static_cast<double>(r.both_yes + r.both_yes_mismatch + r.a_only) / n;
  const double b_yes = static_cast<double>(r.both_yes + r.both_yes_mismatch + r.b_only) / n;
  const double pe = a_yes * b_yes + (1.0 - a_yes) * (1.0 - b_yes);
  if (pe >= 1.0) {
    if (po < 1.0)
      throw ValidationError(
          "kappa is undefined: chance agreement is 1 but observed agreement is not");
    r.kappa = 1.0;
  } else {
    r.kappa = (po - pe) / (1.0 - pe);
  }
  r.percent_agreement = 100.0 * po;
  const long both = r.both_yes + r.both_yes_mismatch;
  r.onset_agreement = both == 0 ? 0.0 : 100.0 * static_cast<double>(exact) / both;
  return r;
}

SegmentAgreement segment_agreement(const AnnotationSet& a, const AnnotationSet& b,
                                   double tolerance_s, Label label) {
  const long long tol_ms = to_ms(tolerance_s);
  SegmentAgreement r;
  for (const auto& [id, segs_a] : a) {
    std::vector<long long> onsets_b;
    if (auto it = b.find(id); it != b.end())
      for (const auto& s : it->second)
        if (s.label == label) onsets_b.push_back(to_ms(s.start_s));
    r.total_b += static_cast<long>(onsets_b.size());
    std::vector<bool> used(onsets_b.size(), false);
    for (const auto& s : segs_a) {
      if (s.label != label) continue;
      ++r.total_a;
      const long long onset = to_ms(s.start_s);
      std::size_t best = onsets_b.size();
      long long best_diff = 0;
      for (std::size_t k = 0; k < onsets_b.size(); ++k) {
        const long long diff = std::llabs(onsets_b[k] - onset);
        if (!used[k] && diff <= tol_ms && (best == onsets_b.size() || diff < best_diff)) {
          best = k;
          best_diff = diff;
        }
      }
      if (best != onsets_b.size()) {
        used[best] = true;
        ++r.matched;
      }
    }
  }
  for (const auto& [id, segs_b] : b)
    if (!a.contains(id))
      for (const auto& s : segs_b)
        if (s.label == label) ++r.total_b;
  const long denom = r.total_a + r.total_b;
  r.percent = denom == 0 ? 0.0 : 100.0 * 2.0 * static_cast<double>(r.matched) / denom;
  return r;
}

}  // namespace empathy
