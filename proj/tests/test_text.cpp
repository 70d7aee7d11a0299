#include <doctest.h>

#include "tgsum/text.hpp"

using namespace tgsum;

TEST_CASE("tokenize lowercases and peels punctuation") {
  CHECK(tokenize("Hello, World!") == Tokens{"hello", ",", "world", "!"});
  CHECK(tokenize("  (quoted)  ") == Tokens{"(", "quoted", ")"});
  CHECK(tokenize("") == Tokens{});
}

TEST_CASE("tokenize keeps abbreviations whole") {
  CHECK(tokenize("Dr. Smith arrived.") == Tokens{"dr.", "smith", "arrived", "."});
  CHECK(tokenize("e.g. this") == Tokens{"e.g.", "this"});
}

TEST_CASE("tokenize splits possessive") {
  CHECK(tokenize("John's car") == Tokens{"john", "'s", "car"});
}

TEST_CASE("split_sentences keeps terminators with their sentence") {
  auto s = split_sentences(tokenize("One two. Three four! Five?"));
  REQUIRE(s.size() == 3);
  CHECK(s[0] == Tokens{"one", "two", "."});
  CHECK(s[1] == Tokens{"three", "four", "!"});
  CHECK(s[2] == Tokens{"five", "?"});
}

TEST_CASE("split_sentences keeps a trailing fragment and does not split at abbreviations") {
  auto s = split_sentences(tokenize("Dr. Who is here. no end"));
  REQUIRE(s.size() == 2);
  CHECK(s[0] == Tokens{"dr.", "who", "is", "here", "."});
  CHECK(s[1] == Tokens{"no", "end"});
}

TEST_CASE("stopwords and punctuation") {
  CHECK(is_stopword("the"));
  CHECK(is_stopword("of"));
  CHECK_FALSE(is_stopword("summarization"));
  CHECK(is_punctuation(","));
  CHECK(is_punctuation("--"));
  CHECK_FALSE(is_punctuation("a."));
  CHECK(content_words({"the", "cat", ",", "sat", "on", "mats"}) == Tokens{"cat", "sat", "mats"});
}

TEST_CASE("porter stemmer reference pairs") {
  const std::pair<const char*, const char*> cases[] = {
      {"caresses", "caress"}, {"ponies", "poni"},     {"ties", "ti"},         {"caress", "caress"},
      {"cats", "cat"},        {"feed", "feed"},       {"agreed", "agre"},     {"plastered", "plaster"},
      {"motoring", "motor"},  {"sing", "sing"},       {"conflated", "conflat"}, {"troubled", "troubl"},
      {"sized", "size"},      {"hopping", "hop"},     {"tanned", "tan"},      {"falling", "fall"},
      {"hissing", "hiss"},    {"fizzed", "fizz"},     {"failing", "fail"},    {"filing", "file"},
      {"happy", "happi"},     {"relational", "relat"}, {"conditional", "condit"}, {"rational", "ration"},
      {"generalization", "gener"}, {"oscillators", "oscil"}, {"adjustable", "adjust"},
      {"electrical", "electr"}, {"effective", "effect"}, {"roll", "roll"},   {"running", "run"},
  };
  for (auto [in, out] : cases) {
    CAPTURE(in);
    CHECK(porter_stem(in) == out);
  }
}

TEST_CASE("porter stemmer leaves short and non-alphabetic words alone") {
  CHECK(porter_stem("is") == "is");
  CHECK(porter_stem("1990s") == "1990s");
  CHECK(porter_stem("'s") == "'s");
}
