#include "tgsum/inference.hpp"

#include <map>

#include "tgsum/error.hpp"

namespace tgsum {

using ad::Graph;
using ad::Var;

void DecodeConfig::validate() const {
  if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
  if (length_alpha < 0) throw ConfigError("length_alpha must be >= 0");
  if (overlap_threshold < 0 || overlap_threshold > 1) throw ConfigError("overlap_threshold must be in [0, 1]");
  if (max_sentences < 1) throw ConfigError("max_sentences must be >= 1");
  if (max_sentence_len < 1) throw ConfigError("max_sentence_len must be >= 1");
}

bool block_trigrams(std::span<const int> text, int candidate) {
  const std::size_t n = text.size();
  if (n < 2) return false;
  const int a = text[n - 2];
  const int b = text[n - 1];
  for (std::size_t i = 0; i + 2 < n; ++i)
    if (text[i] == a && text[i + 1] == b && text[i + 2] == candidate) return true;
  return false;
}

double sentence_overlap(std::span<const int> prev, std::span<const int> next) {
  if (prev.empty() || next.empty()) return 0.0;
  std::map<int, int> counts;
  for (int t : prev) ++counts[t];
  int common = 0;
  for (int t : next) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  return static_cast<double>(common) / static_cast<double>(std::min(prev.size(), next.size()));
}

bool keep_sentence(std::span<const int> prev, std::span<const int> next, double threshold) {
  return sentence_overlap(prev, next) <= threshold;
}

// ---------------------------------------------------------------------------
// Incremental decoder

namespace {

Eigen::VectorXd log_softmax(const Eigen::RowVectorXd& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return (logits.array() - lse).matrix().transpose();
}

Eigen::RowVectorXd sigmoid(const Eigen::RowVectorXd& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

}  // namespace

IncrementalDecoder::IncrementalDecoder(const Model& model, Eigen::MatrixXd enc_z, Eigen::MatrixXd enc_values,
                                       std::optional<Eigen::RowVectorXd> sentence_vector, std::optional<int> sentence)
    : model_(model), z_(std::move(enc_z)), values_(std::move(enc_values)), s_(std::move(sentence_vector)),
      sentence_(sentence) {
  const auto& hp = model_.hparams();
  if (s_.has_value() != sentence_.has_value())
    throw ConfigError("incremental decoder needs both a sentence vector and a sentence index, or neither");
  if (sentence_) {
    if (!hp.structured()) throw ConfigError("flat mode has no sentence positions");
    if (*sentence_ < 1 || *sentence_ > hp.sentence_table_rows())
      throw DataError("sentence position " + std::to_string(*sentence_) + " out of range");
    sentence_emb_ = model_.params().value("dec.sent_pos").row(*sentence_ - 1);
  }
}

IncrementalDecoder::State IncrementalDecoder::initial() {
  const auto& hp = model_.hparams();
  State s;
  s.windows.assign(static_cast<std::size_t>(hp.dec_layers), Eigen::MatrixXd::Zero(hp.kernel_width - 1, hp.dim()));
  consume(s, kSos);
  return s;
}

IncrementalDecoder::State IncrementalDecoder::advance(const State& s, int token) {
  State next = s;
  consume(next, token);
  return next;
}

void IncrementalDecoder::consume(State& s, int token) const {
  const auto& hp = model_.hparams();
  const auto& P = model_.params();
  const int d = hp.dim();
  const int k = hp.kernel_width;
  if (token < 0 || token >= hp.vocab_size) throw DataError("decoder: token id out of vocabulary range");
  if (s.position >= hp.token_table_rows())
    throw DataError("decoder: token position " + std::to_string(s.position + 1) + " exceeds " +
                    std::to_string(hp.token_table_rows()));

  Eigen::RowVectorXd w = P.value("dec.embed").row(token) + P.value("dec.pos").row(s.position);
  if (sentence_) w += sentence_emb_;

  Eigen::RowVectorXd x = w;
  Eigen::RowVectorXd o;
  Eigen::RowVectorXd c;
  Eigen::RowVectorXd window(k * d);
  for (int l = 0; l < hp.dec_layers; ++l) {
    const std::string li = std::to_string(l);
    Eigen::MatrixXd& hist = s.windows[static_cast<std::size_t>(l)];
    for (int j = 0; j < k - 1; ++j) window.segment(j * d, d) = hist.row(j);
    window.segment((k - 1) * d, d) = x;
    Eigen::RowVectorXd conv = window * P.value("dec.conv" + li + ".w") + P.value("dec.conv" + li + ".b");
    o = conv.head(d).cwiseProduct(sigmoid(conv.tail(d)));

    Eigen::RowVectorXd query_in = s_ ? Eigen::RowVectorXd(o + *s_) : o;
    Eigen::RowVectorXd q = query_in * P.value("dec.att" + li + ".w") + P.value("dec.att" + li + ".b") + w;
    Eigen::RowVectorXd scores = q * z_.transpose();
    const double m = scores.maxCoeff();
    Eigen::RowVectorXd a = (scores.array() - m).exp().matrix();
    a /= a.sum();
    c = a * values_;

    if (k > 1) {
      for (int j = 0; j + 1 < k - 1; ++j) hist.row(j) = hist.row(j + 1);
      hist.row(k - 2) = x;
    }
    x = s_ ? Eigen::RowVectorXd(o + *s_ + c) : Eigen::RowVectorXd(o + c);
  }
  s.position += 1;
  s.log_probs = log_softmax((o + c) * P.value("out.wy"));
}

// ---------------------------------------------------------------------------
// Generation

Ids GeneratedSummary::flat_tokens() const {
  Ids out;
  for (const auto& s : sentences) out.insert(out.end(), s.begin(), s.end());
  return out;
}

namespace {

int argmax(const Eigen::MatrixXd& row) {
  int best = 0;
  for (int j = 1; j < row.cols(); ++j)
    if (row(0, j) > row(0, best)) best = j;
  return best;
}

Ids strip_terminator(const Ids& tokens) {
  Ids out;
  for (int t : tokens)
    if (is_text_token(t)) out.push_back(t);
  return out;
}

GeneratedSummary generate_flat(const Model& model, const EncoderOutput& enc, const Graph& g,
                               const DecodeConfig& config) {
  const auto& hp = model.hparams();
  IncrementalDecoder dec(model, g.value(enc.z), g.value(enc.values), std::nullopt, std::nullopt);
  BeamOptions opt;
  opt.beam_size = config.beam_size;
  opt.alpha = config.length_alpha;
  opt.block_trigrams = config.block_trigrams;
  opt.terminators = {kEod};
  opt.max_len = std::min(hp.token_table_rows() - 1, config.max_sentences * (config.max_sentence_len + 1));
  auto cands = beam_search(dec, opt);

  GeneratedSummary out;
  out.sentence_steps = 1;
  if (cands.empty()) return out;
  const BeamCandidate& best = cands.front();
  out.score = best.score;
  out.stopped_by_eod = !best.tokens.empty() && best.tokens.back() == kEod;
  // Sentences split at EOS; overlong ones are chunked so no token is dropped
  // from the middle of the text.
  Ids current;
  auto commit = [&]() {
    for (std::size_t i = 0; i < current.size(); i += static_cast<std::size_t>(config.max_sentence_len)) {
      if (static_cast<int>(out.sentences.size()) >= config.max_sentences) break;
      auto end = std::min(current.size(), i + static_cast<std::size_t>(config.max_sentence_len));
      out.sentences.emplace_back(current.begin() + static_cast<std::ptrdiff_t>(i),
                                 current.begin() + static_cast<std::ptrdiff_t>(end));
    }
    current.clear();
  };
  for (int t : best.tokens) {
    if (t == kEos || t == kEod) {
      commit();
    } else {
      current.push_back(t);
    }
  }
  commit();
  return out;
}

}  // namespace

GeneratedSummary generate(const Model& model, const Ids& source, const DecodeConfig& config) {
  config.validate();
  const auto& hp = model.hparams();
  Graph g(model.params());
  EncoderOutput enc = model.encode(g, source);
  if (!hp.structured()) return generate_flat(model, enc, g, config);

  GeneratedSummary out;
  const Eigen::MatrixXd z = g.value(enc.z);
  const Eigen::MatrixXd values = g.value(enc.values);
  DocState state = model.doc_init(g, enc);
  double total_logprob = 0;
  std::size_t total_tokens = 0;
  Ids history;
  const int steps = std::min(config.max_sentences, hp.max_sentence_positions);

  for (int t = 1; t <= steps; ++t) {
    DocStep step = model.doc_step(g, state, enc);
    state = step.state;
    ++out.sentence_steps;
    if (hp.topic_head()) {
      int label = argmax(g.value(model.topic_logits(g, step.s)));
      out.topics.push_back(label);
      if (label == hp.num_topics) {
        out.stopped_by_eot = true;
        break;
      }
    }

    IncrementalDecoder dec(model, z, values, Eigen::RowVectorXd(g.value(step.s)), t);
    BeamOptions opt;
    opt.beam_size = config.beam_size;
    opt.alpha = config.length_alpha;
    opt.block_trigrams = config.block_trigrams;
    opt.max_len = std::min(config.max_sentence_len, hp.token_table_rows() - 1);
    opt.history = history;
    auto cands = beam_search(dec, opt);

    const BeamCandidate* chosen = nullptr;
    for (const auto& cand : cands) {
      Ids text = strip_terminator(cand.tokens);
      if (!out.sentences.empty() && !text.empty() &&
          !keep_sentence(out.sentences.back(), text, config.overlap_threshold))
        continue;
      chosen = &cand;
      break;
    }
    if (!chosen) {
      ++out.skipped;
      continue;
    }
    total_logprob += chosen->logprob;
    total_tokens += chosen->tokens.size();
    Ids text = strip_terminator(chosen->tokens);
    if (!text.empty()) {
      history.insert(history.end(), text.begin(), text.end());
      out.sentences.push_back(std::move(text));
    }
    if (chosen->tokens.back() == kEod) {
      out.stopped_by_eod = true;
      break;
    }
  }
  if (total_tokens > 0) out.score = length_normalized(total_logprob, total_tokens, config.length_alpha);
  return out;
}

Ids predict_topics(const Model& model, const Ids& source, int steps) {
  const auto& hp = model.hparams();
  if (!hp.topic_head()) throw ConfigError("predict_topics: model has no topic head");
  if (steps < 1 || steps > hp.sentence_table_rows()) throw ConfigError("predict_topics: step count out of range");
  Graph g(model.params());
  EncoderOutput enc = model.encode(g, source);
  DocState state = model.doc_init(g, enc);
  Ids out;
  for (int t = 0; t < steps; ++t) {
    DocStep step = model.doc_step(g, state, enc);
    state = step.state;
    out.push_back(argmax(g.value(model.topic_logits(g, step.s))));
  }
  return out;
}

}  // namespace tgsum
