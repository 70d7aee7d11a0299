#include "tgsum/model.hpp"

#include <cmath>

#include "tgsum/error.hpp"

namespace tgsum {

using ad::Graph;
using ad::Matrix;
using ad::Var;

std::string_view to_string(DecoderMode mode) {
  switch (mode) {
    case DecoderMode::kFlat: return "flat";
    case DecoderMode::kStructured: return "structured";
    case DecoderMode::kStructuredTopic: return "structured+topic";
  }
  return "unknown";
}

DecoderMode parse_mode(std::string_view name) {
  if (name == "flat") return DecoderMode::kFlat;
  if (name == "structured") return DecoderMode::kStructured;
  if (name == "structured+topic" || name == "structured+t") return DecoderMode::kStructuredTopic;
  throw ConfigError("unknown decoder mode: " + std::string(name));
}

// ---------------------------------------------------------------------------
// Hyperparams

void Hyperparams::validate() const {
  if (emb_dim <= 0 || hidden_dim <= 0 || enc_layers <= 0 || dec_layers <= 0 || kernel_width <= 0)
    throw ConfigError("model dimensions must be positive");
  if (kernel_width % 2 == 0) throw ConfigError("kernel_width must be odd");
  if (emb_dim != hidden_dim)
    throw ConfigError("emb_dim and hidden_dim must match (sentence vectors are added to conv outputs)");
  if (dropout < 0 || dropout >= 1) throw ConfigError("dropout must be in [0, 1)");
  if (vocab_size <= kNumSpecials) throw ConfigError("vocab_size must exceed the special tokens");
  if (max_source_positions <= 0 || max_token_positions <= 0 || max_sentence_positions <= 0)
    throw ConfigError("position limits must be positive");
  if (mode == DecoderMode::kStructuredTopic && num_topics < 1)
    throw ConfigError("structured+topic mode needs num_topics >= 1");
}

int Hyperparams::token_table_rows() const {
  return mode == DecoderMode::kFlat ? max_sentence_positions * max_token_positions + 1 : max_token_positions;
}

nlohmann::json Hyperparams::to_json() const {
  return {{"emb_dim", emb_dim},
          {"hidden_dim", hidden_dim},
          {"enc_layers", enc_layers},
          {"dec_layers", dec_layers},
          {"kernel_width", kernel_width},
          {"dropout", dropout},
          {"max_source_positions", max_source_positions},
          {"max_token_positions", max_token_positions},
          {"max_sentence_positions", max_sentence_positions},
          {"vocab_size", vocab_size},
          {"num_topics", num_topics},
          {"mode", std::string(to_string(mode))}};
}

Hyperparams Hyperparams::from_json(const nlohmann::json& j) {
  Hyperparams hp;
  hp.emb_dim = j.value("emb_dim", hp.emb_dim);
  hp.hidden_dim = j.value("hidden_dim", hp.hidden_dim);
  hp.enc_layers = j.value("enc_layers", hp.enc_layers);
  hp.dec_layers = j.value("dec_layers", hp.dec_layers);
  hp.kernel_width = j.value("kernel_width", hp.kernel_width);
  hp.dropout = j.value("dropout", hp.dropout);
  hp.max_source_positions = j.value("max_source_positions", hp.max_source_positions);
  hp.max_token_positions = j.value("max_token_positions", hp.max_token_positions);
  hp.max_sentence_positions = j.value("max_sentence_positions", hp.max_sentence_positions);
  hp.vocab_size = j.value("vocab_size", hp.vocab_size);
  hp.num_topics = j.value("num_topics", hp.num_topics);
  hp.mode = parse_mode(j.value("mode", std::string(to_string(hp.mode))));
  return hp;
}

// ---------------------------------------------------------------------------
// Targets

std::vector<Ids> structured_targets(const Example& ex) {
  std::vector<Ids> out;
  out.reserve(ex.sentences.size() + 1);
  for (const auto& s : ex.sentences) {
    Ids t = s;
    t.push_back(kEos);
    out.push_back(std::move(t));
  }
  out.push_back({kEod});
  return out;
}

Ids flat_target(const Example& ex) {
  Ids out;
  for (const auto& s : ex.sentences) {
    out.insert(out.end(), s.begin(), s.end());
    out.push_back(kEos);
  }
  out.push_back(kEod);
  return out;
}

Ids decoder_input(const Ids& target) {
  Ids in;
  in.reserve(target.size());
  in.push_back(kSos);
  if (!target.empty()) in.insert(in.end(), target.begin(), target.end() - 1);
  return in;
}

// ---------------------------------------------------------------------------
// Model construction

Model::Model(const Hyperparams& hp, std::uint64_t seed) : hp_(hp) {
  hp_.validate();
  create_parameters();
  initialize(seed);
}

Model::Model(const Hyperparams& hp, ad::ParameterSet params) : hp_(hp) {
  hp_.validate();
  create_parameters();
  for (auto& p : params_) {
    if (!params.contains(p.name)) throw DataError("checkpoint is missing parameter " + p.name);
    const auto& src = params.value(p.name);
    if (src.rows() != p.value.rows() || src.cols() != p.value.cols())
      throw DataError("parameter shape mismatch for " + p.name);
    p.value = src;
  }
  if (params.size() != params_.size()) throw DataError("checkpoint has unexpected extra parameters");
}

void Model::create_parameters() {
  const int d = hp_.dim();
  const int k = hp_.kernel_width;
  const int v = hp_.vocab_size;
  params_.add("enc.embed", v, d);
  params_.add("enc.pos", hp_.max_source_positions, d);
  for (int l = 0; l < hp_.enc_layers; ++l) {
    params_.add("enc.conv" + std::to_string(l) + ".w", k * d, 2 * d);
    params_.add("enc.conv" + std::to_string(l) + ".b", 1, 2 * d);
  }
  if (hp_.structured()) {
    params_.add("doc.lstm.w", 2 * d, 4 * d);
    params_.add("doc.lstm.b", 1, 4 * d);
    params_.add("doc.ws", 2 * d, d);
  }
  if (hp_.topic_head()) params_.add("topic.wk", d, hp_.num_topics + 1);
  params_.add("dec.embed", v, d);
  params_.add("dec.pos", hp_.token_table_rows(), d);
  if (hp_.structured()) params_.add("dec.sent_pos", hp_.sentence_table_rows(), d);
  for (int l = 0; l < hp_.dec_layers; ++l) {
    params_.add("dec.conv" + std::to_string(l) + ".w", k * d, 2 * d);
    params_.add("dec.conv" + std::to_string(l) + ".b", 1, 2 * d);
    params_.add("dec.att" + std::to_string(l) + ".w", d, d);
    params_.add("dec.att" + std::to_string(l) + ".b", 1, d);
  }
  params_.add("out.wy", d, v);
}

void Model::initialize(std::uint64_t seed) {
  Rng rng(seed);
  const double d = hp_.dim();
  const double keep = 1.0 - hp_.dropout;
  auto fill_normal = [&](Matrix& m, double stddev) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng, 0.0, stddev);
  };
  auto fill_uniform = [&](Matrix& m, double bound) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = (2.0 * uniform01(rng) - 1.0) * bound;
  };
  for (auto& p : params_) {
    const std::string& n = p.name;
    bool is_bias = n.size() > 2 && n.compare(n.size() - 2, 2, ".b") == 0;
    if (is_bias) {
      p.value.setZero();
    } else if (n == "enc.embed" || n == "enc.pos" || n == "dec.embed" || n == "dec.pos" || n == "dec.sent_pos") {
      fill_normal(p.value, 0.1);
    } else if (n.find(".conv") != std::string::npos) {
      fill_normal(p.value, std::sqrt(4.0 * keep / (hp_.kernel_width * d)));
    } else if (n == "doc.lstm.w") {
      fill_uniform(p.value, 1.0 / std::sqrt(d));
    } else if (n == "doc.ws") {
      fill_normal(p.value, std::sqrt(1.0 / (2.0 * d)));
    } else if (n == "out.wy") {
      fill_normal(p.value, std::sqrt(keep / d));
    } else {
      fill_normal(p.value, std::sqrt(1.0 / d));
    }
  }
}

// ---------------------------------------------------------------------------
// Encoder

EncoderOutput Model::encode(Graph& g, std::span<const int> source, Rng* dropout_rng) const {
  const int n = static_cast<int>(source.size());
  if (n < 1) throw DataError("encode: empty source");
  if (n > hp_.max_source_positions)
    throw DataError("encode: source length " + std::to_string(n) + " exceeds " +
                    std::to_string(hp_.max_source_positions));
  bool all_pad = true;
  for (int id : source) {
    if (id < 0 || id >= hp_.vocab_size) throw DataError("encode: token id out of vocabulary range");
    all_pad = all_pad && id == kPad;
  }
  if (all_pad) throw DataError("encode: source consists only of padding");

  std::vector<int> positions(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) positions[static_cast<std::size_t>(i)] = i;
  Var e = g.add(g.gather(params_.index("enc.embed"), source), g.gather(params_.index("enc.pos"), positions));

  const double p = dropout_rng ? hp_.dropout : 0.0;
  Var x = dropout_rng ? g.dropout(e, p, *dropout_rng) : e;
  const double residual_scale = std::sqrt(0.5);
  for (int l = 0; l < hp_.enc_layers; ++l) {
    Var residual = x;
    Var in = dropout_rng ? g.dropout(x, p, *dropout_rng) : x;
    Var conv = g.conv1d(in, g.param("enc.conv" + std::to_string(l) + ".w"),
                        g.param("enc.conv" + std::to_string(l) + ".b"), hp_.kernel_width,
                        (hp_.kernel_width - 1) / 2);
    x = g.scale(g.add(g.glu(conv), residual), residual_scale);
  }
  return {x, e, g.add(x, e), n};
}

// ---------------------------------------------------------------------------
// Document-level decoder

DocState Model::doc_init(Graph& g, const EncoderOutput& enc) const {
  if (!hp_.structured()) throw ConfigError("doc_init: flat mode has no document decoder");
  DocState s;
  s.h = g.mean_rows(enc.z);
  s.c = g.constant(Matrix::Zero(1, hp_.dim()));
  s.s_prev = g.constant(Matrix::Zero(1, hp_.dim()));
  s.t = 1;
  return s;
}

Attention Model::doc_attend(Graph& g, Var h, const EncoderOutput& enc) const {
  Var alpha = g.softmax_rows(g.matmul_nt(h, enc.z));
  return {g.matmul(alpha, enc.z), alpha};
}

DocStep Model::doc_step(Graph& g, const DocState& state, const EncoderOutput& enc) const {
  if (!hp_.structured()) throw ConfigError("doc_step: flat mode has no document decoder");
  if (state.t > hp_.sentence_table_rows())
    throw DataError("doc_step: sentence index " + std::to_string(state.t) + " exceeds " +
                    std::to_string(hp_.sentence_table_rows()));
  const int d = hp_.dim();
  Var gates = g.add_row(g.matmul(g.concat_cols(state.s_prev, state.h), g.param("doc.lstm.w")),
                        g.param("doc.lstm.b"));
  Var in_gate = g.sigmoid(g.cols(gates, 0, d));
  Var forget = g.sigmoid(g.cols(gates, d, d));
  Var cand = g.tanh(g.cols(gates, 2 * d, d));
  Var out_gate = g.sigmoid(g.cols(gates, 3 * d, d));
  Var c = g.add(g.mul(forget, state.c), g.mul(in_gate, cand));
  Var h = g.mul(out_gate, g.tanh(c));

  Attention att = doc_attend(g, h, enc);
  Var s = g.tanh(g.matmul(g.concat_cols(h, att.context), g.param("doc.ws")));

  DocStep out;
  out.state = {h, c, s, state.t + 1};
  out.s = s;
  out.weights = att.weights;
  return out;
}

Var Model::topic_logits(Graph& g, Var s) const {
  if (!hp_.topic_head()) throw ConfigError("topic_logits: model has no topic head (mode " +
                                           std::string(to_string(hp_.mode)) + ")");
  return g.matmul(s, g.param("topic.wk"));
}

Var Model::topic_distribution(Graph& g, Var s) const { return g.softmax_rows(topic_logits(g, s)); }

// ---------------------------------------------------------------------------
// Sentence-level decoder

Var Model::embed_target(Graph& g, std::span<const int> ids, std::optional<int> sentence) const {
  const int n = static_cast<int>(ids.size());
  if (n < 1) throw DataError("embed_target: empty input");
  if (n > hp_.token_table_rows())
    throw DataError("embed_target: token position " + std::to_string(n) + " exceeds " +
                    std::to_string(hp_.token_table_rows()));
  for (int id : ids)
    if (id < 0 || id >= hp_.vocab_size) throw DataError("embed_target: token id out of vocabulary range");
  std::vector<int> positions(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) positions[static_cast<std::size_t>(i)] = i;
  Var w = g.add(g.gather(params_.index("dec.embed"), ids), g.gather(params_.index("dec.pos"), positions));
  if (sentence) {
    if (!hp_.structured()) throw ConfigError("embed_target: flat mode has no sentence positions");
    if (*sentence < 1 || *sentence > hp_.sentence_table_rows())
      throw DataError("embed_target: sentence position " + std::to_string(*sentence) + " out of range");
    std::vector<int> rows(1, *sentence - 1);
    w = g.add_row(w, g.gather(params_.index("dec.sent_pos"), rows));
  }
  return w;
}

Attention Model::sent_attend(Graph& g, Var o, std::optional<Var> s, Var target_emb, const EncoderOutput& enc,
                             int layer) const {
  const std::string prefix = "dec.att" + std::to_string(layer);
  Var query_in = s ? g.add_row(o, *s) : o;
  Var d = g.add(g.add_row(g.matmul(query_in, g.param(prefix + ".w")), g.param(prefix + ".b")), target_emb);
  Var a = g.softmax_rows(g.matmul_nt(d, enc.z));
  return {g.matmul(a, enc.values), a};
}

DecoderLayer Model::sent_decode_layer(Graph& g, Var prev, std::optional<Var> s, Var target_emb,
                                      const EncoderOutput& enc, int layer, Rng* dropout_rng) const {
  const std::string prefix = "dec.conv" + std::to_string(layer);
  Var in = dropout_rng ? g.dropout(prev, hp_.dropout, *dropout_rng) : prev;
  // causal: output i sees inputs i-k+1 .. i
  Var o = g.glu(g.conv1d(in, g.param(prefix + ".w"), g.param(prefix + ".b"), hp_.kernel_width,
                         hp_.kernel_width - 1));
  Attention att = sent_attend(g, o, s, target_emb, enc, layer);
  Var combined = s ? g.add(g.add_row(o, *s), att.context) : g.add(o, att.context);
  return {o, combined, att.context, att.weights};
}

Var Model::token_logits(Graph& g, Var o, Var c) const { return g.matmul(g.add(o, c), g.param("out.wy")); }

SentenceOutput Model::decode_sentence(Graph& g, std::span<const int> input_ids, std::optional<Var> s,
                                      std::optional<int> sentence, const EncoderOutput& enc,
                                      Rng* dropout_rng) const {
  Var w = embed_target(g, input_ids, sentence);
  SentenceOutput out;
  Var x = dropout_rng ? g.dropout(w, hp_.dropout, *dropout_rng) : w;
  for (int l = 0; l < hp_.dec_layers; ++l) {
    out.layers.push_back(sent_decode_layer(g, x, s, w, enc, l, dropout_rng));
    x = out.layers.back().combined;
  }
  out.logits = token_logits(g, out.layers.back().o, out.layers.back().context);
  return out;
}

// ---------------------------------------------------------------------------
// Loss

LossBreakdown Model::forward_loss(Graph& g, const Example& ex, Rng* dropout_rng) const {
  EncoderOutput enc = encode(g, ex.source, dropout_rng);
  LossBreakdown out;
  std::vector<Var> token_terms;

  if (!hp_.structured()) {
    Ids target = flat_target(ex);
    Ids input = decoder_input(target);
    SentenceOutput so = decode_sentence(g, input, std::nullopt, std::nullopt, enc, dropout_rng);
    token_terms.push_back(g.nll(so.logits, target));
    out.tokens = static_cast<int>(target.size());
  } else {
    auto targets = structured_targets(ex);
    const int steps = static_cast<int>(targets.size());
    if (steps > hp_.sentence_table_rows())
      throw DataError("example has " + std::to_string(ex.sentences.size()) + " sentences; model allows " +
                      std::to_string(hp_.max_sentence_positions));
    if (hp_.topic_head() && static_cast<int>(ex.topic_labels.size()) != steps)
      throw DataError("structured+topic training needs " + std::to_string(steps) + " topic labels, got " +
                      std::to_string(ex.topic_labels.size()));

    // All sentence vectors first, then every sentence in turn.
    DocState state = doc_init(g, enc);
    std::vector<Var> sentence_vectors;
    std::vector<Var> topic_terms;
    for (int t = 0; t < steps; ++t) {
      DocStep step = doc_step(g, state, enc);
      state = step.state;
      sentence_vectors.push_back(step.s);
      if (hp_.topic_head()) {
        int label = ex.topic_labels[static_cast<std::size_t>(t)];
        if (label < 0 || label > hp_.num_topics) throw DataError("topic label out of range");
        std::vector<int> tgt(1, label);
        topic_terms.push_back(g.nll(topic_logits(g, step.s), tgt));
      }
    }
    for (int t = 0; t < steps; ++t) {
      const Ids& target = targets[static_cast<std::size_t>(t)];
      Ids input = decoder_input(target);
      SentenceOutput so = decode_sentence(g, input, sentence_vectors[static_cast<std::size_t>(t)], t + 1, enc,
                                          dropout_rng);
      token_terms.push_back(g.nll(so.logits, target));
      out.tokens += static_cast<int>(target.size());
    }
    if (!topic_terms.empty()) {
      Var topic_sum = g.sum(g.concat_rows(topic_terms));
      Var topic_mean = g.scale(topic_sum, 1.0 / steps);
      out.topic_nll = g.scalar(topic_mean);
      Var token_mean = g.scale(g.sum(g.concat_rows(token_terms)), 1.0 / out.tokens);
      out.token_nll = g.scalar(token_mean);
      out.total = g.add(token_mean, topic_mean);
      return out;
    }
  }
  Var token_mean = g.scale(g.sum(g.concat_rows(token_terms)), 1.0 / out.tokens);
  out.token_nll = g.scalar(token_mean);
  out.total = token_mean;
  return out;
}

}  // namespace tgsum
