#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "empathy/corpus.hpp"
#include "empathy/features.hpp"

namespace empathy {

/// Lowercased word tokens and single-character punctuation tokens. An
/// apostrophe directly after a letter stays attached to the word ("po'",
/// "l'"); any other non-alphanumeric character is a token of its own.
std::vector<std::string> tokenize(std::string_view utf8);

/// True when the token starts with a letter or digit.
bool is_word_token(std::string_view token);

/// All 1..max_n grams over the word tokens, joined with single spaces.
std::vector<std::string> word_ngrams(const std::vector<std::string>& tokens, std::size_t max_n = 3);

/// Text of the transcript entries on `channel` whose midpoint lies inside
/// `span`, joined with spaces.
std::string transcript_text(const Conversation& conversation, Channel channel, const Span& span);

class Vocabulary {
 public:
  struct Entry {
    std::string ngram;
    long df = 0;
  };

  /// Keeps the `cap` n-grams with the highest document frequency; ties are
  /// ordered lexicographically.
  static Vocabulary build(const std::vector<std::vector<std::string>>& documents,
                          std::size_t max_n = 3, std::size_t cap = 10000);

  std::size_t size() const { return entries_.size(); }
  long n_documents() const { return n_documents_; }
  std::size_t max_n() const { return max_n_; }
  const std::vector<Entry>& entries() const { return entries_; }
  /// Index of `ngram`, or -1.
  long index(const std::string& ngram) const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> lookup_;
  long n_documents_ = 0;
  std::size_t max_n_ = 3;

  void index_entries();
};

using SparseVector = std::vector<std::pair<std::size_t, double>>;

/// log(1 + f) * log(N / df) per in-vocabulary n-gram, sorted by index.
/// `n_documents` defaults to the vocabulary's training document count.
SparseVector tfidf_vector(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                          long n_documents = -1);

SchemaPtr lexical_schema(const Vocabulary& vocab);

class LexiconDict {
 public:
  /// LIWC dictionary text format: a '%'-delimited header of "id<TAB>name"
  /// rows followed by "word<TAB>id id ..." rows. A trailing '*' marks a
  /// prefix entry.
  static LexiconDict parse(std::string_view text, const std::string& source = "<lexicon>");
  static LexiconDict load(const std::filesystem::path& path);
  std::string serialize() const;

  /// Category ids in ascending order, with their names.
  const std::map<int, std::string>& categories() const { return categories_; }
  /// Categories of `word` (already lowercased). An exact entry wins over
  /// prefix entries; among prefixes the longest stem wins.
  const std::vector<int>* lookup(std::string_view word) const;

 private:
  struct Entry {
    std::string pattern;  // as written, including any '*'
    std::vector<int> ids;
  };
  std::map<int, std::string> categories_;
  std::vector<Entry> entries_;  // file order, for serialization
  std::unordered_map<std::string, std::size_t> exact_;
  std::unordered_map<std::string, std::size_t> prefix_;
  std::size_t longest_prefix_ = 0;
};

/// Punctuation categories in output order.
const std::vector<std::string>& punctuation_categories();
/// General descriptors in output order.
const std::vector<std::string>& general_descriptors();

/// 5 general descriptors, one relative frequency per dictionary category and
/// the punctuation categories. Relative values are percentages of the word count.
std::vector<double> psycho_features(const std::vector<std::string>& tokens, const LexiconDict& dict);
SchemaPtr psycho_schema(const LexiconDict& dict);

}  // namespace empathy
