#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "tgsum/error.hpp"
#include "tgsum/inference.hpp"
#include "tgsum/model.hpp"

using namespace tgsum;
using namespace tgsum::testing;

namespace {

Eigen::VectorXd log_softmax_row(const Eigen::MatrixXd& logits, Eigen::Index row) {
  Eigen::RowVectorXd r = logits.row(row);
  double m = r.maxCoeff();
  double lse = m + std::log((r.array() - m).exp().sum());
  return (r.array() - lse).transpose();
}

}  // namespace

TEST_CASE("targets and teacher forcing inputs") {
  Example ex;
  ex.sentences = {{10, 11}, {12}};
  auto st = structured_targets(ex);
  REQUIRE(st.size() == 3);
  CHECK(st[0] == Ids{10, 11, kEos});
  CHECK(st[1] == Ids{12, kEos});
  CHECK(st[2] == Ids{kEod});
  CHECK(flat_target(ex) == Ids{10, 11, kEos, 12, kEos, kEod});
  CHECK(decoder_input({10, 11, kEos}) == Ids{kSos, 10, 11});
}

TEST_CASE("parameter shapes follow the mode") {
  Model full(tiny_hparams(DecoderMode::kStructuredTopic, 20, 3), 1);
  const auto& p = full.params();
  CHECK(p.value("enc.embed").rows() == 20);
  CHECK(p.value("topic.wk").cols() == 4);
  CHECK(p.value("dec.sent_pos").rows() == 5);
  CHECK(p.value("out.wy").cols() == 20);
  Model plain(tiny_hparams(DecoderMode::kStructured), 1);
  CHECK_FALSE(plain.params().contains("topic.wk"));
  CHECK(plain.params().contains("doc.ws"));
  Model flat(tiny_hparams(DecoderMode::kFlat), 1);
  CHECK_FALSE(flat.params().contains("doc.ws"));
  CHECK_FALSE(flat.params().contains("dec.sent_pos"));
  CHECK(flat.params().value("dec.pos").rows() == flat.hparams().token_table_rows());
}

TEST_CASE("hyperparameter validation") {
  auto hp = tiny_hparams(DecoderMode::kStructuredTopic);
  CHECK_NOTHROW(hp.validate());
  auto bad = hp;
  bad.kernel_width = 4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = hp;
  bad.hidden_dim = 9;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = hp;
  bad.num_topics = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = hp;
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(Hyperparams::from_json(hp.to_json()) == hp);
  CHECK(parse_mode("structured+topic") == DecoderMode::kStructuredTopic);
  CHECK_THROWS_AS(parse_mode("tree"), ConfigError);
}

TEST_CASE("attention and topic distributions are normalized") {
  Model m(tiny_hparams(DecoderMode::kStructuredTopic), 2);
  Rng rng(2);
  Example ex = random_example(rng, 20, 9, 2, 4, 3);
  ad::Graph g(m.params());
  auto enc = m.encode(g, ex.source);
  CHECK(g.value(enc.z).rows() == 9);
  auto state = m.doc_init(g, enc);
  auto step = m.doc_step(g, state, enc);
  CHECK(g.value(step.weights).sum() == doctest::Approx(1.0));
  CHECK(g.value(m.topic_distribution(g, step.s)).sum() == doctest::Approx(1.0));
  CHECK(step.state.t == 2);
  auto out = m.decode_sentence(g, decoder_input(structured_targets(ex)[0]), step.s, 1, enc);
  CHECK(g.value(out.logits).rows() == 5);
  for (const auto& layer : out.layers) {
    Eigen::VectorXd sums = g.value(layer.weights).rowwise().sum();
    for (Eigen::Index i = 0; i < sums.size(); ++i) CHECK(sums[i] == doctest::Approx(1.0));
  }
}

TEST_CASE("incremental decoding matches the full decoder") {
  for (auto mode : {DecoderMode::kFlat, DecoderMode::kStructured, DecoderMode::kStructuredTopic}) {
    Model m(tiny_hparams(mode), 3);
    Rng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
      Example ex = random_example(rng, 20, 4 + trial, 2, 3, 3);
      ad::Graph g(m.params());
      auto enc = m.encode(g, ex.source);
      std::optional<ad::Var> s;
      std::optional<int> sent;
      std::optional<Eigen::RowVectorXd> s_value;
      if (m.hparams().structured()) {
        auto step = m.doc_step(g, m.doc_init(g, enc), enc);
        s = step.s;
        sent = 1;
        s_value = Eigen::RowVectorXd(g.value(step.s));
      }
      Ids prefix = {kSos};
      for (int i = 0; i < 5; ++i) prefix.push_back(random_token(rng, 20));
      auto out = m.decode_sentence(g, prefix, s, sent, enc);
      const Eigen::MatrixXd& logits = g.value(out.logits);

      IncrementalDecoder inc(m, g.value(enc.z), g.value(enc.values), s_value, sent);
      auto state = inc.initial();
      for (std::size_t i = 0; i < prefix.size(); ++i) {
        Eigen::VectorXd expect = log_softmax_row(logits, static_cast<Eigen::Index>(i));
        CHECK((inc.log_probs(state) - expect).cwiseAbs().maxCoeff() < 1e-10);
        if (i + 1 < prefix.size()) state = inc.advance(state, prefix[i + 1]);
      }
    }
  }
}

TEST_CASE("structured decoder with a zero sentence vector reduces to the flat decoder") {
  Model structured(tiny_hparams(DecoderMode::kStructured), 4);
  Model flat(tiny_hparams(DecoderMode::kFlat), 5);
  for (auto& p : flat.params()) {
    const auto& src = structured.params().value(p.name);
    const Eigen::Index n = std::min(src.rows(), p.value.rows());
    p.value.topRows(n) = src.topRows(n);
  }
  structured.params().value("dec.sent_pos").setZero();
  Rng rng(4);
  Ids source = random_example(rng, 20, 7, 1, 1, 3).source;
  Ids input = {kSos, 9, 10, 11};
  ad::Graph gs(structured.params());
  auto es = structured.encode(gs, source);
  auto zero = gs.constant(Eigen::MatrixXd::Zero(1, 8));
  auto a = structured.decode_sentence(gs, input, zero, 1, es);
  ad::Graph gf(flat.params());
  auto ef = flat.encode(gf, source);
  auto b = flat.decode_sentence(gf, input, std::nullopt, std::nullopt, ef);
  CHECK((gs.value(a.logits) - gf.value(b.logits)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward loss reports token counts and finite values") {
  Rng rng(5);
  Example ex = random_example(rng, 20, 8, 3, 3, 3);
  for (auto mode : {DecoderMode::kFlat, DecoderMode::kStructured, DecoderMode::kStructuredTopic}) {
    Model m(tiny_hparams(mode), 6);
    ad::Graph g(m.params());
    auto loss = m.forward_loss(g, ex);
    CHECK(std::isfinite(g.scalar(loss.total)));
    CHECK(loss.tokens == 13);
    CHECK(loss.token_nll > 0);
    CHECK((mode == DecoderMode::kStructuredTopic) == (loss.topic_nll > 0));
  }
}

TEST_CASE("invalid inputs raise data errors") {
  Model m(tiny_hparams(DecoderMode::kStructuredTopic), 7);
  ad::Graph g(m.params());
  CHECK_THROWS_AS(m.encode(g, Ids{}), DataError);
  CHECK_THROWS_AS(m.encode(g, Ids(17, 9)), DataError);
  CHECK_THROWS_AS(m.encode(g, Ids{20}), DataError);
  CHECK_THROWS_AS(m.encode(g, Ids{kPad, kPad}), DataError);
  Rng rng(7);
  Example ex = random_example(rng, 20, 5, 2, 3, 3);
  ex.topic_labels.pop_back();
  CHECK_THROWS_AS(m.forward_loss(g, ex), DataError);
  ex = random_example(rng, 20, 5, 5, 3, 3);
  CHECK_THROWS_AS(m.forward_loss(g, ex), DataError);
  ex = random_example(rng, 20, 5, 1, 8, 3);
  CHECK_THROWS_AS(m.forward_loss(g, ex), DataError);
  Model flat(tiny_hparams(DecoderMode::kFlat), 7);
  ad::Graph gf(flat.params());
  auto enc = flat.encode(gf, Ids{9, 10});
  CHECK_THROWS_AS(flat.doc_init(gf, enc), ConfigError);
}
