#include "empathy/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace empathy {

namespace {

void check_reference(const std::vector<Segment>& ref) {
  if (ref.empty()) throw ValidationError("reference has no segments");
  double t = 0.0;
  for (const auto& s : ref) {
    if (s.label != Label::Neutral && s.label != Label::Empathy)
      throw ValidationError("reference segments must be Neutral or Empathy");
    if (std::abs(s.start_s - t) > 1e-9 || !(s.end_s > s.start_s))
      throw ValidationError("reference segments must be contiguous from 0");
    t = s.end_s;
  }
}

}  // namespace

std::vector<AlignedSpan> align(const std::vector<Segment>& reference,
                               const std::vector<LabeledSpan>& hypothesis,
                               const AlignOptions& options) {
  check_reference(reference);
  const double t_end = reference.back().end_s;
  for (std::size_t i = 0; i < hypothesis.size(); ++i) {
    if (!(hypothesis[i].end_s > hypothesis[i].start_s))
      throw ValidationError("automatic segment with non-positive length");
    if (i > 0 && hypothesis[i].start_s < hypothesis[i - 1].end_s)
      throw ValidationError("automatic segments must be sorted and non-overlapping");
  }

  // hypothesis labels over [0, t_end] as contiguous pieces including gaps
  struct Piece {
    double start, end;
    Label label;
    bool gap;
  };
  std::vector<Piece> pieces;
  double cursor = 0.0;
  for (const auto& h : hypothesis) {
    const double s = std::max(h.start_s, 0.0), e = std::min(h.end_s, t_end);
    if (e <= s) continue;
    if (s > cursor) pieces.push_back({cursor, s, options.gap_label, true});
    pieces.push_back({s, e, h.label, false});
    cursor = e;
  }
  if (cursor < t_end) pieces.push_back({cursor, t_end, options.gap_label, true});

  std::vector<AlignedSpan> out;
  std::size_t r = 0;
  for (const auto& p : pieces) {
    double s = p.start;
    while (s < p.end) {
      while (r + 1 < reference.size() && reference[r].end_s <= s) ++r;
      const double e = std::min(p.end, reference[r].end_s);
      out.push_back({s, e, reference[r].label, p.label, p.gap});
      s = e;
    }
  }
  return out;
}

WeightedConfusion& WeightedConfusion::operator+=(const WeightedConfusion& o) {
  tp += o.tp;
  fn += o.fn;
  fp += o.fp;
  tn += o.tn;
  return *this;
}

WeightedConfusion weighted_confusion(const std::vector<AlignedSpan>& spans, const AlignOptions& options) {
  WeightedConfusion c;
  for (const auto& s : spans) {
    if (s.gap && !options.score_gaps) continue;
    const bool ref_e = s.ref == Label::Empathy, hyp_e = s.hyp == Label::Empathy;
    (ref_e ? (hyp_e ? c.tp : c.fn) : (hyp_e ? c.fp : c.tn)) += s.length();
  }
  return c;
}

double unweighted_average(const WeightedConfusion& c) {
  if (!(c.tp + c.fn > 0.0) || !(c.tn + c.fp > 0.0))
    throw ValidationError("UA is undefined when a class has no reference time");
  return 0.5 * (c.tp / (c.tp + c.fn) + c.tn / (c.tn + c.fp));
}

std::vector<Segment> reference_segments(const SegmentPair& pair) {
  return {{Channel::Agent, 0.0, pair.empathy.start_s, Label::Neutral},
          {Channel::Agent, pair.empathy.start_s, pair.empathy.end_s, Label::Empathy}};
}

Hypothesis load_hypothesis(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  Hypothesis hyp;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& conv : j.at("hypotheses")) {
      const std::string id = conv.at("conversation_id");
      auto& spans = hyp[id];
      for (const auto& s : conv.at("segments")) {
        const std::string label_text = s.at("label");
        const auto label = parse_label(label_text);
        if (!label || (*label != Label::Empathy && *label != Label::Neutral))
          throw ValidationError(path.string() + ": conversation " + id + ": bad label '" + label_text + "'");
        spans.push_back({s.at("start_s"), s.at("end_s"), *label, s.value("margin", 0.0)});
      }
      std::sort(spans.begin(), spans.end(),
                [](const LabeledSpan& a, const LabeledSpan& b) { return a.start_s < b.start_s; });
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return hyp;
}

void save_hypothesis(const Hypothesis& hyp, const std::filesystem::path& path) {
  nlohmann::json j;
  auto& list = j["hypotheses"] = nlohmann::json::array();
  for (const auto& [id, spans] : hyp) {
    nlohmann::json conv = {{"conversation_id", id}, {"segments", nlohmann::json::array()}};
    for (const auto& s : spans)
      conv["segments"].push_back({{"start_s", s.start_s},
                                  {"end_s", s.end_s},
                                  {"label", std::string(to_string(s.label))},
                                  {"margin", s.margin}});
    list.push_back(std::move(conv));
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

ScoreReport score(const std::vector<SegmentPair>& pairs, const Hypothesis& hyp,
                  const AlignOptions& options) {
  ScoreReport report;
  static const std::vector<LabeledSpan> none;
  for (const auto& pair : pairs) {
    const auto it = hyp.find(pair.conversation_id);
    const auto& spans = it == hyp.end() ? none : it->second;
    const auto aligned = align(reference_segments(pair), spans, options);
    double gaps = 0.0;
    for (const auto& a : aligned)
      if (a.gap) gaps += a.length();
    report.gap_seconds += gaps;
    const auto conf = weighted_confusion(aligned, options);
    report.per_conversation[pair.conversation_id] = conf;
    if (conf.tp + conf.fn > 0.0 && conf.tn + conf.fp > 0.0)
      report.per_conversation_ua[pair.conversation_id] = unweighted_average(conf);
    report.pooled += conf;
  }
  if (report.gap_seconds > 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.3f s of reference time not covered by automatic segments scored as %s",
                  report.gap_seconds, std::string(to_string(options.gap_label)).c_str());
    report.warnings.emplace_back(buf);
  }
  report.ua = unweighted_average(report.pooled);
  return report;
}

namespace {
nlohmann::json confusion_json(const WeightedConfusion& c) {
  return {{"tp", c.tp}, {"fn", c.fn}, {"fp", c.fp}, {"tn", c.tn}};
}
}  // namespace

std::string ScoreReport::to_json() const {
  nlohmann::json j;
  j["pooled"] = confusion_json(pooled);
  j["ua"] = ua;
  j["gap_seconds"] = gap_seconds;
  j["warnings"] = warnings;
  auto& per = j["per_conversation"] = nlohmann::json::object();
  for (const auto& [id, c] : per_conversation) {
    per[id] = confusion_json(c);
    if (auto it = per_conversation_ua.find(id); it != per_conversation_ua.end()) per[id]["ua"] = it->second;
  }
  return j.dump(2);
}

std::string ScoreReport::summary() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "conversations: %zu\n"
                "seconds        hyp Empathy  hyp Neutral\n"
                "ref Empathy   %12.3f %12.3f\n"
                "ref Neutral   %12.3f %12.3f\n"
                "UA: %.4f\n",
                per_conversation.size(), pooled.tp, pooled.fn, pooled.fp, pooled.tn, ua);
  std::string out = buf;
  for (const auto& w : warnings) out += "warning: " + w + "\n";
  return out;
}

}  // namespace empathy
