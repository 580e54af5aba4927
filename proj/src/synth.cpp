#include "empathy/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "empathy/random.hpp"
#include "empathy/wav.hpp"

namespace empathy {

namespace {

constexpr double kPi = std::numbers::pi;

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ms(double t) { return std::round(t * 1000.0) / 1000.0; }

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

template <class T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[uniform_index(rng, items.size())];
}

const std::vector<std::string>& neutral_agent_sentences() {
  static const std::vector<std::string> s = {
      "Buongiorno, sono l'operatore. Come posso aiutarla?",
      "Mi dice il suo codice cliente, per favore?",
      "Il contratto risulta attivo dal mese scorso.",
      "La fattura è stata emessa il 15 marzo.",
      "Controllo subito la sua posizione.",
      "Il pagamento risulta registrato.",
      "Può ripetere il numero di telefono?",
      "La linea è stata attivata ieri.",
      "Le offerte disponibili sono tre.",
      "Attenda in linea un momento, grazie.",
      "Allora, il suo account è attivo.",
      "Le invio il codice per posta."};
  return s;
}

const std::vector<std::string>& empathy_templates() {
  // {} is replaced by a keyword phrase
  static const std::vector<std::string> s = {"{}, cosa possiamo fare per lei.",
                                             "{}, risolviamo subito il problema.",
                                             "{}, le faccio avere un rimborso.",
                                             "Capisco la situazione, {}.",
                                             "{}, ci penso io."};
  return s;
}

const std::vector<std::string>& customer_sentences() {
  static const std::vector<std::string> s = {"Sì, buongiorno.", "Il numero è 348 12 12.",
                                             "Ho ricevuto la fattura ieri.", "Va bene, grazie.",
                                             "Ok, attendo.", "Non ho capito."};
  return s;
}

const std::vector<std::string>& angry_sentences() {
  static const std::vector<std::string> s = {"È inaccettabile, sono stufo!",
                                             "Sempre lo stesso problema, che vergogna!",
                                             "Sono arrabbiato, pago e non funziona niente!"};
  return s;
}

std::string fill_template(const std::string& tpl, const std::string& phrase) {
  const auto pos = tpl.find("{}");
  std::string text = tpl.substr(0, pos) + phrase + tpl.substr(pos + 2);
  if (!text.empty() && text[0] >= 'a' && text[0] <= 'z') text[0] = static_cast<char>(text[0] - 32);
  return text;
}

struct Formants {
  double f1, f2, f3;
};

const Formants kVowels[] = {{730, 1090, 2440}, {530, 1840, 2480}, {270, 2290, 3010},
                            {570, 840, 2410},  {300, 870, 2240}};

// Two-pole resonator with unit gain at its centre frequency.
struct Resonator {
  double b0 = 1, a1 = 0, a2 = 0, y1 = 0, y2 = 0;
  void set(double freq, double bw, double sr) {
    const double r = std::exp(-kPi * bw / sr);
    const double theta = 2.0 * kPi * freq / sr;
    a1 = -2.0 * r * std::cos(theta);
    a2 = r * r;
    b0 = (1.0 - r) * std::sqrt(1.0 - 2.0 * r * std::cos(2.0 * theta) + r * r);
  }
  double step(double x) {
    const double y = b0 * x - a1 * y1 - a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

struct Voice {
  double f0_hz;
  double level_dbfs;
};

/// Adds a vowel-like utterance to `out` between sample indices [s0, s1),
/// scaled so its RMS equals the voice level.
void synthesize_utterance(std::vector<float>& out, std::size_t s0, std::size_t s1, const Voice& v,
                          Rng& rng) {
  const double sr = kSampleRate;
  const double f_utt = v.f0_hz * uniform(rng, 0.97, 1.03);
  const double vib_rate = uniform(rng, 2.0, 4.0), vib_phase = uniform(rng, 0.0, 2.0 * kPi);
  const std::size_t n = s1 - s0;
  Resonator r1, r2, r3;
  double phase = 0.0;
  std::size_t syllable_end = 0, syllable_start = 0;
  const std::size_t fade = static_cast<std::size_t>(0.02 * sr);
  std::vector<double> buf(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= syllable_end) {
      syllable_start = i;
      syllable_end = i + static_cast<std::size_t>(uniform(rng, 0.15, 0.25) * sr);
      const auto& vw = kVowels[uniform_index(rng, 5)];
      r1.set(vw.f1, 80, sr);
      r2.set(vw.f2, 100, sr);
      r3.set(vw.f3, 120, sr);
    }
    const double t = static_cast<double>(i) / sr;
    const double rel = static_cast<double>(i) / static_cast<double>(n);
    const double f0 = f_utt * (1.0 + 0.04 * std::sin(2.0 * kPi * vib_rate * t + vib_phase)) * (1.0 - 0.08 * rel);
    phase += f0 / sr;
    if (phase >= 1.0) phase -= 1.0;
    const double source = (2.0 * phase - 1.0) + 0.05 * standard_normal(rng);
    const double y = r1.step(source) + 0.5 * r2.step(source) + 0.25 * r3.step(source);
    const double syl = static_cast<double>(i - syllable_start) /
                       static_cast<double>(std::max<std::size_t>(syllable_end - syllable_start, 1));
    double env = 0.4 + 0.6 * std::sin(kPi * std::min(syl, 1.0));
    if (i < fade) env *= static_cast<double>(i) / static_cast<double>(fade);
    if (n - i < fade) env *= static_cast<double>(n - i) / static_cast<double>(fade);
    buf[i] = env * y;
  }
  double energy = 0.0;
  for (double x : buf) energy += x * x;
  if (energy <= 0.0) return;
  const double gain = std::pow(10.0, v.level_dbfs / 20.0) / std::sqrt(energy / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) out[s0 + i] += static_cast<float>(gain * buf[i]);
}

struct Utterance {
  double start, end;
  bool empathy;
  std::string text;
};

double draw_truncated(Rng& rng, std::pair<double, double> parent, double lower) {
  for (int i = 0; i < 10000; ++i) {
    const double v = parent.first + parent.second * standard_normal(rng);
    if (v >= lower) return v;
  }
  return lower;
}

Conversation make_conversation(const SynthSpec& spec, std::size_t index,
                               const std::filesystem::path& audio_dir) {
  char idbuf[64];
  std::snprintf(idbuf, sizeof idbuf, "%s%04zu", spec.id_prefix.c_str(), index);
  Conversation c;
  c.id = idbuf;
  c.speaker_id = "spk_" + c.id;
  Rng rng(derive_seed(spec.seed, c.id));

  const auto neutral_parent = truncated_normal_parent(spec.neutral_mean_s, spec.neutral_std_s, spec.neutral_min_s);
  const auto empathy_parent = truncated_normal_parent(spec.empathy_mean_s, spec.empathy_std_s, spec.empathy_min_s);
  const double d_neutral = draw_truncated(rng, neutral_parent, spec.neutral_min_s);
  const double d_empathy = draw_truncated(rng, empathy_parent, spec.empathy_min_s);
  const double d_tail = uniform(rng, spec.tail_min_s, spec.tail_max_s);

  const double base_f0 = spec.speaker_f0_mean_hz + spec.speaker_f0_std_hz * standard_normal(rng);
  const double base_level = spec.speaker_level_dbfs + uniform(rng, -spec.speaker_level_jitter_db, spec.speaker_level_jitter_db);

  auto sentence = [&](bool empathy) {
    const double rate = empathy ? spec.keyword_rate : spec.neutral_keyword_rate;
    if (!spec.keywords.empty() && uniform01(rng) < rate)
      return fill_template(pick(rng, empathy_templates()), pick(rng, spec.keywords));
    return pick(rng, neutral_agent_sentences());
  };

  std::vector<Utterance> utts;
  // Utterance lengths are drawn the same way for both classes; a span stops
  // once an average-length utterance would have its midpoint past `limit`.
  const double mean_len = 0.5 * (spec.utterance_min_s + spec.utterance_max_s);
  // returns (end of the last utterance, start of the next one)
  auto fill = [&](double cursor, double limit, bool empathy) {
    double last_end = cursor;
    bool any = false;
    while (true) {
      if (any && cursor + 0.5 * mean_len > limit) break;
      const double len = ms(uniform(rng, spec.utterance_min_s, spec.utterance_max_s));
      utts.push_back({ms(cursor), ms(cursor + len), empathy, sentence(empathy)});
      any = true;
      last_end = ms(cursor + len);
      cursor = ms(last_end + uniform(rng, spec.pause_min_s, spec.pause_max_s));
    }
    return std::pair{last_end, cursor};
  };

  // onset and offset marks sit in the middle of the surrounding pauses
  const double lead = ms(uniform(rng, 0.2, 0.5));
  const auto [neutral_end, empathy_start] = fill(lead, d_neutral, false);
  const double t_i = ms(0.5 * (neutral_end + empathy_start));
  const auto [empathy_end, tail_start] = fill(empathy_start, t_i + d_empathy, true);
  const double t_e = ms(0.5 * (empathy_end + tail_start));
  const double tail_end = fill(tail_start, tail_start + d_tail, false).first;
  c.duration_s = ms(tail_end + 0.5);
  const auto n_samples = static_cast<std::size_t>(std::llround(c.duration_s * kSampleRate));

  std::vector<float> agent(n_samples, 0.0f), customer(n_samples, 0.0f);
  const double noise_amp = std::pow(10.0, spec.noise_floor_dbfs / 20.0);
  for (auto& s : agent) s = static_cast<float>(noise_amp * standard_normal(rng));
  for (auto& s : customer) s = static_cast<float>(noise_amp * standard_normal(rng));

  for (const auto& u : utts) {
    Voice v{base_f0, base_level};
    if (u.empathy) {
      v.f0_hz *= 1.0 + spec.pitch_shift_pct / 100.0;
      v.level_dbfs += spec.loudness_shift_db;
    }
    synthesize_utterance(agent, static_cast<std::size_t>(std::llround(u.start * kSampleRate)),
                         static_cast<std::size_t>(std::llround(u.end * kSampleRate)), v, rng);
    c.transcripts[Channel::Agent].push_back({u.start, u.end, u.text});
  }

  // customer: sparse turns, optionally one angry or frustrated turn before the onset
  const double cust_f0 = 210.0 + 15.0 * standard_normal(rng);
  const bool angry = uniform01(rng) < spec.anger_rate;
  const Label cust_label = uniform01(rng) < 0.5 ? Label::Anger : Label::Frustration;
  std::vector<Segment> customer_segments;
  bool angry_done = false;
  for (double t = ms(uniform(rng, 3.0, 10.0)); t + 4.5 < c.duration_s; t = ms(t + uniform(rng, 8.0, 20.0))) {
    const double end = ms(t + uniform(rng, 1.5, 4.0));
    const bool this_angry = angry && !angry_done && end < t_i;
    Voice v{cust_f0, -24.0};
    if (this_angry) {
      v.f0_hz *= 1.15;
      v.level_dbfs += 4.0;
      customer_segments.push_back({Channel::Customer, t, end, cust_label});
      angry_done = true;
    }
    synthesize_utterance(customer, static_cast<std::size_t>(std::llround(t * kSampleRate)),
                         static_cast<std::size_t>(std::llround(end * kSampleRate)), v, rng);
    c.transcripts[Channel::Customer].push_back(
        {t, end, this_angry ? pick(rng, angry_sentences()) : pick(rng, customer_sentences())});
  }

  auto tier = [&](double onset) {
    std::vector<Segment> segs = {{Channel::Agent, 0.0, onset, Label::Neutral},
                                 {Channel::Agent, onset, t_e, Label::Empathy},
                                 {Channel::Agent, t_e, c.duration_s, Label::Neutral}};
    segs.insert(segs.end(), customer_segments.begin(), customer_segments.end());
    return segs;
  };
  c.tiers["annotator1"] = tier(t_i);
  if (spec.second_annotator) {
    if (uniform01(rng) < spec.annotator_miss_rate) {
      std::vector<Segment> segs = {{Channel::Agent, 0.0, c.duration_s, Label::Neutral}};
      segs.insert(segs.end(), customer_segments.begin(), customer_segments.end());
      c.tiers["annotator2"] = segs;
    } else {
      const double jitter = uniform(rng, -spec.annotator_jitter_s, spec.annotator_jitter_s);
      c.tiers["annotator2"] = tier(ms(std::clamp(t_i + jitter, 0.5, t_e - 0.5)));
    }
  }

  c.agent_wav = audio_dir / (c.id + "_agent.wav");
  c.customer_wav = audio_dir / (c.id + "_customer.wav");
  write_wav(c.agent_wav, agent);
  write_wav(c.customer_wav, customer);
  return c;
}

}  // namespace

SynthSpec SynthSpec::without_shift() const {
  SynthSpec s = *this;
  s.pitch_shift_pct = 0.0;
  s.loudness_shift_db = 0.0;
  s.keyword_rate = s.neutral_keyword_rate;
  return s;
}

void SynthSpec::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw ValidationError(std::string(what) + " must be positive");
  };
  if (n_conversations == 0) throw ValidationError("need at least one conversation");
  positive(neutral_mean_s, "neutral_mean_s");
  positive(neutral_std_s, "neutral_std_s");
  positive(empathy_mean_s, "empathy_mean_s");
  positive(empathy_std_s, "empathy_std_s");
  positive(utterance_min_s, "utterance_min_s");
  if (utterance_max_s < utterance_min_s || pause_max_s < pause_min_s || tail_max_s < tail_min_s)
    throw ValidationError("synthesis ranges must satisfy min <= max");
  if (neutral_min_s < 1.0 || empathy_min_s < 1.0)
    throw ValidationError("minimum segment durations must be at least 1 s");
  if (pitch_shift_pct <= -90.0) throw ValidationError("pitch_shift_pct must be above -90");
  for (double r : {keyword_rate, neutral_keyword_rate, anger_rate, annotator_miss_rate})
    if (r < 0.0 || r > 1.0) throw ValidationError("rates must lie in [0, 1]");
}

std::pair<double, double> truncated_normal_parent(double mean, double stddev, double lower) {
  double mu = mean, sigma = stddev;
  for (int it = 0; it < 500; ++it) {
    const double a = (lower - mu) / sigma;
    const double tail = std::max(1.0 - normal_cdf(a), 1e-300);
    const double lambda = normal_pdf(a) / tail;
    const double m = mu + sigma * lambda;
    const double s = sigma * std::sqrt(std::max(1.0 + a * lambda - lambda * lambda, 1e-12));
    if (std::abs(m - mean) < 1e-10 && std::abs(s - stddev) < 1e-10) break;
    mu += mean - m;
    sigma = std::max(sigma * stddev / s, 1e-6);
  }
  return {mu, sigma};
}

Corpus generate(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  const auto audio_dir = out_dir / "audio";
  std::filesystem::create_directories(audio_dir);
  Corpus corpus;
  corpus.reserve(spec.n_conversations);
  for (std::size_t i = 0; i < spec.n_conversations; ++i) corpus.push_back(make_conversation(spec, i, audio_dir));
  save_manifest(corpus, out_dir / "manifest.json");
  return corpus;
}

}  // namespace empathy
