#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "tgsum/error.hpp"
#include "tgsum/io.hpp"
#include "tgsum/topics.hpp"

using namespace tgsum;

namespace {

// Two disjoint vocabularies; every document draws from one of them.
std::vector<Tokens> two_group_docs(int n, std::uint64_t seed) {
  const Tokens a = {"apple", "pear", "plum", "grape", "melon"};
  const Tokens b = {"truck", "wagon", "sedan", "lorry", "coupe"};
  Rng rng(seed);
  std::vector<Tokens> docs;
  for (int i = 0; i < n; ++i) {
    const Tokens& src = i % 2 ? a : b;
    Tokens d;
    for (int j = 0; j < 6; ++j) d.push_back(src[rng() % src.size()]);
    docs.push_back(d);
  }
  return docs;
}

}  // namespace

TEST_CASE("topic terms drop stopwords and punctuation and stem") {
  CHECK(topic_terms({"the", "running", "dogs", "were", "."}) == Tokens{"run", "dog"});
  CHECK(topic_terms({",", "the", "of"}).empty());
}

TEST_CASE("lda separates disjoint vocabularies") {
  auto docs = two_group_docs(200, 1);
  LdaOptions opts;
  opts.iterations = 100;
  TopicModel m = train_lda(docs, 2, opts);
  REQUIRE(m.phi.size() == 2);
  for (const auto& row : m.phi) {
    double s = 0;
    for (double v : row) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  std::set<std::string> fruit = {"apple", "pear", "plum", "grape", "melon"};
  for (int k = 0; k < 2; ++k) {
    auto top = m.top_words(k, 5);
    int in_fruit = static_cast<int>(std::count_if(top.begin(), top.end(), [&](auto& w) { return fruit.count(w) > 0; }));
    CHECK((in_fruit == 0 || in_fruit == 5));
  }
  CHECK(infer_sentence_topic(m, {"apple", "pear"}).topic != infer_sentence_topic(m, {"truck", "coupe"}).topic);
}

TEST_CASE("lda is deterministic for a seed and supports a single topic") {
  auto docs = two_group_docs(40, 2);
  LdaOptions opts;
  opts.iterations = 20;
  CHECK(train_lda(docs, 3, opts).phi == train_lda(docs, 3, opts).phi);
  TopicModel one = train_lda(docs, 1, opts);
  CHECK(infer_sentence_topic(one, {"apple"}).topic == 0);
  CHECK_THROWS(train_lda(docs, 0, opts));
}

TEST_CASE("fold-in ignores word order and falls back without known words") {
  auto docs = two_group_docs(100, 3);
  TopicModel m = train_lda(docs, 2, {0.001, 0.01, 60, 5});
  Tokens t = {"apple", "truck", "pear", "wagon", "plum"};
  Tokens r(t.rbegin(), t.rend());
  CHECK(infer_sentence_topic(m, t).theta == infer_sentence_topic(m, r).theta);
  auto unknown = infer_sentence_topic(m, {"zebra"});
  CHECK(unknown.fallback);
  CHECK(unknown.topic == m.fallback_topic);
  CHECK(annotate_sentence(m, {"The", "apples", "."}) == infer_sentence_topic(m, {"appl"}).topic);
}

TEST_CASE("topic model file round trip is exact") {
  auto docs = two_group_docs(60, 4);
  TopicModel m = train_lda(docs, 2, {0.001, 0.01, 30, 8});
  auto path = std::filesystem::temp_directory_path() / "tgsum_unit_topics.txt";
  m.save(path);
  TopicModel back = TopicModel::load(path);
  CHECK(back.num_topics == m.num_topics);
  CHECK(back.vocab == m.vocab);
  CHECK(back.phi == m.phi);
  CHECK(back.fallback_topic == m.fallback_topic);
  CHECK(back.alpha == m.alpha);
  CHECK_THROWS_AS(TopicModel::load(path.string() + ".missing"), DataError);
}

TEST_CASE("npmi coherence extremes") {
  std::vector<Tokens> together = {{"a", "b"}, {"a", "b"}, {"c"}};
  CHECK(npmi_coherence({"a", "b"}, together, 10) == doctest::Approx(1.0));
  std::vector<Tokens> apart = {{"a"}, {"b"}, {"a"}, {"b"}};
  CHECK(npmi_coherence({"a", "b"}, apart, 10) < -0.9);
  CHECK(npmi_coherence({"a"}, apart, 10) == 0.0);
}

TEST_CASE("grid search orders candidates by coherence") {
  auto docs = two_group_docs(80, 5);
  auto grid = grid_search_topics(docs, {1, 2, 4}, {0.001, 0.01, 30, 3});
  REQUIRE(grid.size() == 3);
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i - 1].coherence.mean >= grid[i].coherence.mean);
}

TEST_CASE("labeling appends the end-of-topics label") {
  auto docs = two_group_docs(60, 6);
  TopicModel m = train_lda(docs, 2, {0.001, 0.01, 30, 3});
  Vocab v({"apple", "truck", "."});
  Example ex;
  ex.source = {v.id("apple")};
  ex.sentences = {{v.id("apple"), v.id(".")}, {v.id("truck")}};
  std::vector<Example> exs = {ex};
  label_examples(m, v, exs);
  REQUIRE(exs[0].topic_labels.size() == 3);
  CHECK(exs[0].topic_labels.back() == m.eot_label());
  CHECK(exs[0].topic_labels[0] != exs[0].topic_labels[1]);
}
