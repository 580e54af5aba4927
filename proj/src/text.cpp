#include "empathy/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace empathy {

namespace {

// Decodes one code point; malformed bytes are returned as U+FFFD.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const int c = cont(static_cast<std::size_t>(k));
    if (c < 0) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

bool is_letter(char32_t cp) {
  if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) return true;
  if (cp < 0xC0 || cp == 0xD7 || cp == 0xF7 || cp == 0xFFFD) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  return true;
}

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' ||
         cp == 0xA0 || (cp >= 0x2000 && cp <= 0x200B) || cp == 0x3000;
}

bool is_apostrophe(char32_t cp) { return cp == '\'' || cp == 0x2019; }

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if ((cp >= 0x100 && cp <= 0x137) || (cp >= 0x14A && cp <= 0x177)) return cp | 1;
  if ((cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E)) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp == 0x178) return 0xFF;
  if (cp >= 0x391 && cp <= 0x3A9) return cp + 0x20;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  return cp;
}

std::size_t code_point_count(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size();) {
    next_code_point(s, i);
    ++n;
  }
  return n;
}

enum Punct { kPeriod, kComma, kColon, kSemiC, kQMark, kExclam, kDash, kQuote, kApostro, kParenth, kOtherP, kAllPct };

Punct punct_class(char32_t cp) {
  switch (cp) {
    case '.': case 0x2026: return kPeriod;
    case ',': return kComma;
    case ':': return kColon;
    case ';': return kSemiC;
    case '?': case 0xBF: return kQMark;
    case '!': case 0xA1: return kExclam;
    case '-': case 0x2013: case 0x2014: return kDash;
    case '"': case 0xAB: case 0xBB: case 0x201C: case 0x201D: return kQuote;
    case '\'': case 0x2019: return kApostro;
    case '(': case ')': case '[': case ']': case '{': case '}': return kParenth;
    default: return kOtherP;
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::vector<std::string> tokenize(std::string_view utf8) {
  std::vector<std::string> tokens;
  std::string word;
  bool last_letter = false;
  auto flush = [&] {
    if (!word.empty()) tokens.push_back(std::move(word));
    word.clear();
    last_letter = false;
  };
  for (std::size_t i = 0; i < utf8.size();) {
    const char32_t cp = next_code_point(utf8, i);
    if (is_letter(cp) || is_digit(cp)) {
      append_utf8(word, to_lower(cp));
      last_letter = is_letter(cp);
    } else if (is_apostrophe(cp) && last_letter) {
      word += '\'';
      flush();
    } else {
      flush();
      if (!is_space(cp)) {
        std::string p;
        append_utf8(p, cp);
        tokens.push_back(std::move(p));
      }
    }
  }
  flush();
  return tokens;
}

bool is_word_token(std::string_view token) {
  if (token.empty()) return false;
  std::size_t i = 0;
  const char32_t cp = next_code_point(token, i);
  return is_letter(cp) || is_digit(cp);
}

std::vector<std::string> word_ngrams(const std::vector<std::string>& tokens, std::size_t max_n) {
  std::vector<const std::string*> words;
  for (const auto& t : tokens)
    if (is_word_token(t)) words.push_back(&t);
  std::vector<std::string> out;
  for (std::size_t n = 1; n <= max_n; ++n)
    for (std::size_t i = 0; i + n <= words.size(); ++i) {
      std::string g = *words[i];
      for (std::size_t k = 1; k < n; ++k) g += ' ' + *words[i + k];
      out.push_back(std::move(g));
    }
  return out;
}

std::string transcript_text(const Conversation& conversation, Channel channel, const Span& span) {
  std::string out;
  const auto it = conversation.transcripts.find(channel);
  if (it == conversation.transcripts.end()) return out;
  for (const auto& e : it->second) {
    const double mid = 0.5 * (e.start_s + e.end_s);
    if (mid >= span.start_s && mid < span.end_s) {
      if (!out.empty()) out += ' ';
      out += e.text;
    }
  }
  return out;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& documents,
                             std::size_t max_n, std::size_t cap) {
  std::unordered_map<std::string, long> df;
  for (const auto& doc : documents) {
    auto grams = word_ngrams(doc, max_n);
    std::sort(grams.begin(), grams.end());
    grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
    for (auto& g : grams) ++df[g];
  }
  Vocabulary v;
  v.n_documents_ = static_cast<long>(documents.size());
  v.max_n_ = max_n;
  v.entries_.reserve(df.size());
  for (auto& [g, n] : df) v.entries_.push_back({g, n});
  std::sort(v.entries_.begin(), v.entries_.end(), [](const Entry& a, const Entry& b) {
    return a.df != b.df ? a.df > b.df : a.ngram < b.ngram;
  });
  if (v.entries_.size() > cap) v.entries_.resize(cap);
  v.index_entries();
  return v;
}

void Vocabulary::index_entries() {
  lookup_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) lookup_.emplace(entries_[i].ngram, i);
}

long Vocabulary::index(const std::string& ngram) const {
  const auto it = lookup_.find(ngram);
  return it == lookup_.end() ? -1 : static_cast<long>(it->second);
}

bool Vocabulary::operator==(const Vocabulary& other) const {
  if (n_documents_ != other.n_documents_ || max_n_ != other.max_n_ ||
      entries_.size() != other.entries_.size())
    return false;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].ngram != other.entries_[i].ngram || entries_[i].df != other.entries_[i].df)
      return false;
  return true;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "#vocabulary documents=" << n_documents_ << " max_n=" << max_n_ << '\n';
  for (const auto& e : entries_) out << e.ngram << '\t' << e.df << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  Vocabulary v;
  if (!std::getline(in, line) ||
      std::sscanf(line.c_str(), "#vocabulary documents=%ld max_n=%zu", &v.n_documents_, &v.max_n_) != 2)
    throw ValidationError(path.string() + ": missing #vocabulary header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected ngram<TAB>df");
    Entry e{line.substr(0, tab), std::atol(line.c_str() + tab + 1)};
    if (e.df <= 0 || e.df > v.n_documents_)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": bad document frequency");
    v.entries_.push_back(std::move(e));
  }
  v.index_entries();
  return v;
}

SparseVector tfidf_vector(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                          long n_documents) {
  const long n = n_documents < 0 ? vocab.n_documents() : n_documents;
  std::map<std::size_t, long> counts;
  for (const auto& g : word_ngrams(tokens, vocab.max_n())) {
    const long idx = vocab.index(g);
    if (idx >= 0) ++counts[static_cast<std::size_t>(idx)];
  }
  SparseVector out;
  for (auto [idx, f] : counts) {
    const long df = vocab.entries()[idx].df;
    const double w = std::log(1.0 + static_cast<double>(f)) *
                     std::log(static_cast<double>(n) / static_cast<double>(df));
    out.emplace_back(idx, w);
  }
  return out;
}

SchemaPtr lexical_schema(const Vocabulary& vocab) {
  auto s = std::make_shared<FeatureSchema>();
  s->id = "lexical";
  s->names.reserve(vocab.size());
  for (const auto& e : vocab.entries()) s->names.push_back("ng:" + e.ngram);
  return s;
}

LexiconDict LexiconDict::parse(std::string_view text, const std::string& source) {
  LexiconDict d;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  int section = 0;  // 0 before header, 1 in header, 2 body
  auto fail = [&](const std::string& what) {
    throw ValidationError(source + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line == "%") {
      if (section >= 2) fail("unexpected '%' after the category header");
      ++section;
      continue;
    }
    if (section == 0) fail("dictionary must start with a '%' line");
    std::istringstream fields(line);
    if (section == 1) {
      int id = 0;
      std::string name;
      if (!(fields >> id >> name)) fail("expected 'id<TAB>name'");
      if (!d.categories_.emplace(id, name).second) fail("duplicate category id " + std::to_string(id));
      continue;
    }
    Entry e;
    const auto tab = line.find_first_of("\t ");
    if (tab == std::string::npos) fail("entry without category ids");
    e.pattern = line.substr(0, tab);
    std::istringstream ids(line.substr(tab));
    std::string tok;
    while (ids >> tok) {
      char* end = nullptr;
      const long id = std::strtol(tok.c_str(), &end, 10);
      if (*end != '\0') fail("bad category id '" + tok + "'");
      if (!d.categories_.count(static_cast<int>(id))) fail("unknown category id " + tok);
      e.ids.push_back(static_cast<int>(id));
    }
    if (e.ids.empty()) fail("entry without category ids");
    const auto star = e.pattern.find('*');
    if (star != std::string::npos && star + 1 != e.pattern.size())
      fail("wildcard '*' allowed only at the end of an entry");
    std::string key;
    for (const auto& t : tokenize(e.pattern.substr(0, star))) key += t;
    if (star != std::string::npos) {
      d.prefix_[key] = d.entries_.size();
      d.longest_prefix_ = std::max(d.longest_prefix_, key.size());
    } else {
      d.exact_[key] = d.entries_.size();
    }
    d.entries_.push_back(std::move(e));
  }
  if (section < 2) fail("unterminated category header");
  return d;
}

LexiconDict LexiconDict::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open lexicon " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::string LexiconDict::serialize() const {
  std::string out = "%\n";
  for (const auto& [id, name] : categories_) out += std::to_string(id) + "\t" + name + "\n";
  out += "%\n";
  for (const auto& e : entries_) {
    out += e.pattern;
    for (std::size_t i = 0; i < e.ids.size(); ++i) out += (i ? " " : "\t") + std::to_string(e.ids[i]);
    out += '\n';
  }
  return out;
}

const std::vector<int>* LexiconDict::lookup(std::string_view word) const {
  const std::string w(word);
  if (auto it = exact_.find(w); it != exact_.end()) return &entries_[it->second].ids;
  // a prefix entry may match a word that still carries a trailing apostrophe
  for (std::size_t len = std::min(w.size(), longest_prefix_);; --len) {
    if (auto it = prefix_.find(w.substr(0, len)); it != prefix_.end()) return &entries_[it->second].ids;
    if (len == 0) break;
  }
  return nullptr;
}

const std::vector<std::string>& punctuation_categories() {
  static const std::vector<std::string> names = {"Period", "Comma",   "Colon",   "SemiC",
                                                 "QMark",  "Exclam",  "Dash",    "Quote",
                                                 "Apostro", "Parenth", "OtherP", "AllPct"};
  return names;
}

const std::vector<std::string>& general_descriptors() {
  static const std::vector<std::string> names = {"WC", "WPS", "Dic", "Sixltr", "Numerals"};
  return names;
}

std::vector<double> psycho_features(const std::vector<std::string>& tokens, const LexiconDict& dict) {
  const auto& cats = dict.categories();
  std::vector<double> out(5 + cats.size() + punctuation_categories().size(), 0.0);
  std::map<int, std::size_t> slot;
  for (const auto& [id, name] : cats) slot.emplace(id, 5 + slot.size());
  const std::size_t punct_base = 5 + cats.size();

  long words = 0, in_dict = 0, long_words = 0, numerals = 0, sentences = 0;
  std::vector<long> cat_hits(cats.size(), 0);
  std::vector<long> punct(punctuation_categories().size(), 0);
  bool open_sentence = false;
  for (const auto& t : tokens) {
    if (is_word_token(t)) {
      ++words;
      open_sentence = true;
      if (std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) ++numerals;
      std::size_t letters = code_point_count(t);
      if (t.back() == '\'') {
        --letters;
        ++punct[kApostro];
        ++punct[kAllPct];
      }
      if (letters > 6) ++long_words;
      if (const auto* ids = dict.lookup(t)) {
        ++in_dict;
        for (int id : *ids) ++cat_hits[slot.at(id) - 5];
      }
      continue;
    }
    std::size_t i = 0;
    const char32_t cp = next_code_point(t, i);
    const Punct p = punct_class(cp);
    ++punct[p];
    ++punct[kAllPct];
    if ((cp == '.' || cp == '?' || cp == '!' || cp == 0x2026) && open_sentence) {
      ++sentences;
      open_sentence = false;
    }
  }
  if (words == 0) return out;
  if (open_sentence) ++sentences;
  const double wc = static_cast<double>(words);
  out[0] = wc;
  out[1] = wc / static_cast<double>(std::max(sentences, 1L));
  out[2] = 100.0 * static_cast<double>(in_dict) / wc;
  out[3] = 100.0 * static_cast<double>(long_words) / wc;
  out[4] = 100.0 * static_cast<double>(numerals) / wc;
  for (std::size_t c = 0; c < cat_hits.size(); ++c)
    out[5 + c] = 100.0 * static_cast<double>(cat_hits[c]) / wc;
  for (std::size_t p = 0; p < punct.size(); ++p)
    out[punct_base + p] = 100.0 * static_cast<double>(punct[p]) / wc;
  return out;
}

SchemaPtr psycho_schema(const LexiconDict& dict) {
  auto s = std::make_shared<FeatureSchema>();
  s->id = "psycho";
  for (const auto& n : general_descriptors()) s->names.push_back("liwc:" + n);
  for (const auto& [id, name] : dict.categories()) s->names.push_back("liwc:" + name);
  for (const auto& n : punctuation_categories()) s->names.push_back("liwc:" + n);
  return s;
}

}  // namespace empathy
