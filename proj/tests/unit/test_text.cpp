#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "empathy/text.hpp"

using namespace empathy;
namespace fs = std::filesystem;

namespace {

const LexiconDict& fixture() {
  static const LexiconDict d = LexiconDict::load(EMPATHY_FIXTURE_LEXICON);
  return d;
}

}  // namespace

TEST_CASE("tokenizer keeps elisions and splits punctuation") {
  const auto t = tokenize("Capisco, l'operatore è QUI... vediamo un po'!");
  const std::vector<std::string> expected = {"capisco", ",",  "l'", "operatore", "è", "qui", ".", ".",
                                             ".",       "vediamo", "un", "po'", "!"};
  CHECK(t == expected);
  CHECK(tokenize("  ") .empty());
  CHECK(tokenize("15 marzo") == std::vector<std::string>{"15", "marzo"});
  CHECK(is_word_token("po'"));
  CHECK_FALSE(is_word_token(","));
}

TEST_CASE("word n-grams skip punctuation") {
  const auto g = word_ngrams(tokenize("a, b c"), 2);
  CHECK(g == std::vector<std::string>{"a", "b", "c", "a b", "b c"});
  CHECK(word_ngrams(tokenize("a b c"), 3).size() == 6);
}

TEST_CASE("tf-idf weight of a single n-gram") {
  // 10 documents, "ciao" in two of them
  std::vector<std::vector<std::string>> docs(10, std::vector<std::string>{"altro"});
  docs[0].push_back("ciao");
  docs[3].push_back("ciao");
  const auto vocab = Vocabulary::build(docs, 1);
  CHECK(vocab.n_documents() == 10);
  const auto v = tfidf_vector({"ciao"}, vocab);
  REQUIRE(v.size() == 1);
  CHECK(v[0].first == static_cast<std::size_t>(vocab.index("ciao")));
  CHECK(v[0].second == doctest::Approx(std::log(2.0) * std::log(5.0)).epsilon(1e-12));
  CHECK(std::abs(v[0].second - 1.1156) < 1e-4);
  // "altro" is in every document, so its idf is zero
  for (const auto& [index, value] : tfidf_vector({"altro"}, vocab)) CHECK(value == 0.0);
  CHECK(tfidf_vector({"mai", "visto"}, vocab).empty());
}

TEST_CASE("vocabulary cap, ordering and persistence") {
  const std::vector<std::vector<std::string>> docs = {tokenize("b a c"), tokenize("a b"), tokenize("a d")};
  const auto v = Vocabulary::build(docs, 2, 3);
  REQUIRE(v.size() == 3);
  CHECK(v.entries()[0].ngram == "a");
  CHECK(v.entries()[1].ngram == "b");
  CHECK(v.entries()[2].ngram == "a b");  // df 1 ties broken lexicographically
  const auto path = fs::temp_directory_path() / "empathy_unit_vocab.tsv";
  v.save(path);
  CHECK(Vocabulary::load(path) == v);
  CHECK(lexical_schema(v)->size() == 3);
}

TEST_CASE("lexicon parse and serialize round trip") {
  const std::string text = "%\n1\tfunct\n2\tposemo\n3\tnegemo\n%\nil\t1\nbene\t2\nmal*\t3\nmale\t3 1\n";
  const auto d = LexiconDict::parse(text);
  CHECK(d.categories().size() == 3);
  auto squash = [](std::string s) {
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
    return s;
  };
  CHECK(squash(d.serialize()) == squash(text));
  CHECK(squash(LexiconDict::parse(d.serialize()).serialize()) == squash(text));
}

TEST_CASE("lexicon lookup prefers exact entries and longer stems") {
  const auto d = LexiconDict::parse("%\n1\ta\n2\tb\n3\tc\n%\nmal*\t1\nmale\t2\nmalin*\t3\n");
  REQUIRE(d.lookup("male"));
  CHECK(*d.lookup("male") == std::vector<int>{2});
  CHECK(*d.lookup("malato") == std::vector<int>{1});
  CHECK(*d.lookup("malinconia") == std::vector<int>{3});
  CHECK(d.lookup("bene") == nullptr);
}

TEST_CASE("malformed lexicons are rejected") {
  CHECK_THROWS_AS(LexiconDict::parse("1\ta\n%\n"), ValidationError);
  CHECK_THROWS_AS(LexiconDict::parse("%\n1\ta\n%\nparola\t9\n"), ValidationError);
  CHECK_THROWS_AS(LexiconDict::parse("%\nx\ta\n%\n"), ValidationError);
}

TEST_CASE("psycholinguistic vector of a fixture sentence") {
  const auto& d = fixture();
  REQUIRE(d.categories().size() == 85);
  const auto v = psycho_features(tokenize("Capisco, risolviamo subito il problema."), d);
  REQUIRE(v.size() == 102);
  REQUIRE(psycho_schema(d)->size() == 102);

  // Five words, one sentence. Sixltr counts capisco, risolviamo, problema.
  // Categories: capisco {12 15 4 35 34 78}, risolviamo {12 15 5 77},
  // subito {17 55}, il {1 11}, problema via problem* {76 30}.
  std::vector<double> expected(102, 0.0);
  expected[0] = 5.0;
  expected[1] = 5.0;
  expected[2] = 100.0;
  expected[3] = 60.0;
  expected[4] = 0.0;
  for (int id : {12, 15, 4, 35, 34, 78, 12, 15, 5, 77, 17, 55, 1, 11, 76, 30})
    expected[static_cast<std::size_t>(5 + id - 1)] += 20.0;
  const std::size_t punct = 90;
  expected[punct + 0] = 20.0;   // Period
  expected[punct + 1] = 20.0;   // Comma
  expected[punct + 11] = 40.0;  // AllPct
  for (std::size_t i = 0; i < 102; ++i) {
    CAPTURE(i);
    CHECK(v[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  }
}

TEST_CASE("psycholinguistic vector of empty text is zero") {
  const auto v = psycho_features({}, fixture());
  CHECK(std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }));
  const auto p = psycho_features(tokenize("!!"), fixture());
  CHECK(p[0] == 0.0);
}

TEST_CASE("numerals, apostrophes and sentence count") {
  const auto v = psycho_features(tokenize("Ha 3 anni. Un po' di più? Sì"), fixture());
  const auto schema = psycho_schema(fixture());
  const auto& names = schema->names;
  auto get = [&](const std::string& n) {
    return v[static_cast<std::size_t>(std::find(names.begin(), names.end(), "liwc:" + n) - names.begin())];
  };
  // ha 3 anni | un po' di più | sì: eight words in three sentences
  CHECK(get("WC") == 8.0);
  CHECK(get("WPS") == doctest::Approx(8.0 / 3.0));
  CHECK(get("Numerals") == doctest::Approx(12.5));
  CHECK(get("Apostro") == doctest::Approx(12.5));
  CHECK(get("QMark") == doctest::Approx(12.5));
}
