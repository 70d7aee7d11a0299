#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "tgsum/error.hpp"
#include "tgsum/inference.hpp"

using namespace tgsum;
using namespace tgsum::testing;

namespace {

constexpr int kA = 7;
constexpr int kB = 8;
constexpr int kToyVocab = 9;

Eigen::VectorXd toy_distribution(std::span<const int> prefix) {
  Eigen::VectorXd p = Eigen::VectorXd::Constant(kToyVocab, 1e-12);
  if (prefix.empty()) {
    p[kA] = 0.4;
    p[kB] = 0.35;
    p[kEos] = 0.25;
  } else if (prefix.back() == kA) {
    p[kEos] = 0.2;
    p[kA] = 0.4;
    p[kB] = 0.4;
  } else {
    p[kEos] = 0.9;
    p[kA] = 0.1;
  }
  return p.array().log();
}

}  // namespace

TEST_CASE("trigram blocking") {
  Ids text = {1, 2, 3, 1, 2};
  CHECK(block_trigrams(text, 3));
  CHECK_FALSE(block_trigrams(text, 4));
  CHECK_FALSE(block_trigrams(Ids{1, 2}, 3));
  CHECK(block_trigrams(Ids{5, 5, 5}, 5));
  CHECK_FALSE(block_trigrams(Ids{5, 5}, 5));
}

TEST_CASE("sentence overlap and the discard boundary") {
  Ids prev = {10, 11, 12, 13, 14};
  Ids four_of_five = {10, 11, 12, 13, 20};
  CHECK(sentence_overlap(prev, four_of_five) == doctest::Approx(0.8));
  CHECK(keep_sentence(prev, four_of_five, 0.8));
  Ids superset = {10, 11, 12, 13, 14, 15};
  CHECK(sentence_overlap(prev, superset) == 1.0);
  CHECK_FALSE(keep_sentence(prev, superset, 0.8));
  CHECK(sentence_overlap(Ids{10, 10}, Ids{10, 11}) == doctest::Approx(0.5));
  CHECK(keep_sentence(Ids{}, prev, 0.8));
}

TEST_CASE("beam search finds what greedy misses") {
  PrefixScorer scorer(toy_distribution);
  BeamOptions opt;
  opt.max_len = 1;
  opt.alpha = 0.0;
  opt.block_trigrams = false;
  opt.terminators = {kEos};
  opt.beam_size = 1;
  auto greedy = beam_search(scorer, opt);
  REQUIRE_FALSE(greedy.empty());
  CHECK(greedy[0].tokens == Ids{kA, kEos});
  CHECK(greedy[0].logprob == doctest::Approx(std::log(0.4 * 0.2)));
  opt.beam_size = 2;
  auto beam = beam_search(scorer, opt);
  REQUIRE_FALSE(beam.empty());
  CHECK(beam[0].tokens == Ids{kB, kEos});
  CHECK(beam[0].logprob == doctest::Approx(std::log(0.35 * 0.9)));
}

TEST_CASE("beam search results are sorted and respect length limits") {
  auto random_lp = [&](std::span<const int> prefix) {
    Rng local(mix_seed(17, prefix.size() * 31 + (prefix.empty() ? 0 : static_cast<std::size_t>(prefix.back()))));
    Eigen::VectorXd v(kToyVocab);
    for (int i = 0; i < kToyVocab; ++i) v[i] = normal(local, 0, 1);
    double lse = std::log(v.array().exp().sum());
    return Eigen::VectorXd(v.array() - lse);
  };
  PrefixScorer scorer(random_lp);
  BeamOptions opt;
  opt.beam_size = 3;
  opt.max_len = 4;
  auto out = beam_search(scorer, opt);
  REQUIRE_FALSE(out.empty());
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].tokens.size() <= 5);
    CHECK((out[i].tokens.back() == kEos || out[i].tokens.back() == kEod));
    CHECK(out[i].score == doctest::Approx(length_normalized(out[i].logprob, out[i].tokens.size(), 1.0)));
    if (i) CHECK(out[i - 1].score >= out[i].score);
  }
  CHECK(length_normalized(-4.0, 4, 0.0) == -4.0);
  CHECK(length_normalized(-4.0, 4, 1.0) == -1.0);
}

TEST_CASE("a topic head that predicts end-of-topics first yields an empty summary") {
  Model m(tiny_hparams(DecoderMode::kStructuredTopic), 3);
  Rng rng(3);
  Ids source = random_example(rng, 20, 6, 1, 1, 3).source;
  Eigen::RowVectorXd s1;
  {
    ad::Graph g(m.params());
    auto enc = m.encode(g, source);
    s1 = g.value(m.doc_step(g, m.doc_init(g, enc), enc).s);
  }
  auto& wk = m.params().value("topic.wk");
  wk.setZero();
  wk.col(m.hparams().num_topics) = s1.transpose() * 10.0;
  auto out = generate(m, source, DecodeConfig{});
  CHECK(out.sentences.empty());
  CHECK(out.stopped_by_eot);
  CHECK(out.flat_tokens().empty());
  CHECK(predict_topics(m, source, 2)[0] == m.hparams().num_topics);
}

TEST_CASE("generation terminates within the configured limits") {
  Rng rng(4);
  for (auto mode : {DecoderMode::kFlat, DecoderMode::kStructured, DecoderMode::kStructuredTopic}) {
    for (int seed = 0; seed < 4; ++seed) {
      Model m(tiny_hparams(mode), static_cast<std::uint64_t>(seed + 10));
      DecodeConfig cfg;
      cfg.beam_size = 2;
      cfg.max_sentences = 3;
      cfg.max_sentence_len = 5;
      Ids source = random_example(rng, 20, 8, 1, 1, 3).source;
      auto out = generate(m, source, cfg);
      CHECK(static_cast<int>(out.sentences.size()) <= (mode == DecoderMode::kFlat ? 15 : 3));
      for (const auto& s : out.sentences) {
        CHECK_FALSE(s.empty());
        CHECK(static_cast<int>(s.size()) <= (mode == DecoderMode::kFlat ? 40 : 5));
        for (int t : s) CHECK(is_text_token(t));
      }
      CHECK_FALSE(has_repeated_trigram(out.flat_tokens()));
      CHECK(std::isfinite(out.score));
    }
  }
}

TEST_CASE("decode configuration and topic prediction errors") {
  DecodeConfig cfg;
  cfg.beam_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = DecodeConfig{};
  cfg.overlap_threshold = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  Model plain(tiny_hparams(DecoderMode::kStructured), 1);
  CHECK_THROWS_AS(predict_topics(plain, Ids{9, 10}, 2), ConfigError);
  Model full(tiny_hparams(DecoderMode::kStructuredTopic), 1);
  CHECK(predict_topics(full, Ids{9, 10}, 3).size() == 3);
}
