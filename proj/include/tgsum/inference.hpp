#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tgsum/corpus.hpp"
#include "tgsum/model.hpp"

namespace tgsum {

struct DecodeConfig {
  int beam_size = 5;
  double length_alpha = 1.0;
  bool block_trigrams = true;
  double overlap_threshold = 0.8;
  int max_sentences = 15;
  int max_sentence_len = 40;

  void validate() const;
};

// Tokens that count as summary text (everything but the sentence and
// document terminators).
inline bool is_text_token(int id) { return id != kEos && id != kEod; }

// True when appending `candidate` to `text` would repeat a trigram already in `text`.
bool block_trigrams(std::span<const int> text, int candidate);

// Multiset token overlap divided by the shorter sentence length.
double sentence_overlap(std::span<const int> prev, std::span<const int> next);
// Keep unless the overlap is strictly above `threshold`.
bool keep_sentence(std::span<const int> prev, std::span<const int> next, double threshold = 0.8);

struct BeamOptions {
  int beam_size = 5;
  int max_len = 40;  // non-terminal tokens; the following position must terminate
  double alpha = 1.0;
  std::vector<int> terminators = {kEos, kEod};
  std::vector<int> banned = {kPad, kSos, kEop, kEot};
  bool block_trigrams = true;
  Ids history;  // previously committed summary text, for trigram blocking
};

struct BeamCandidate {
  Ids tokens;  // including the terminator
  double logprob = 0;
  double score = 0;  // logprob / |tokens|^alpha
};

inline double length_normalized(double logprob, std::size_t length, double alpha) {
  return alpha == 0.0 ? logprob : logprob / std::pow(static_cast<double>(length), alpha);
}

// Length-normalized beam search. `Scorer` provides
//   State initial();
//   const Eigen::VectorXd& log_probs(const State&);   // next-token log-probabilities
//   State advance(const State&, int token);
// Returns finished hypotheses by descending normalized score.
template <typename Scorer>
std::vector<BeamCandidate> beam_search(Scorer& scorer, const BeamOptions& opt) {
  using State = typename Scorer::State;
  struct Hyp {
    Ids tokens;
    double logprob;
    State state;
  };
  struct Cand {
    int hyp;
    int token;
    double logprob;
  };
  auto is_terminator = [&](int t) {
    return std::find(opt.terminators.begin(), opt.terminators.end(), t) != opt.terminators.end();
  };
  auto is_banned = [&](int t) { return std::find(opt.banned.begin(), opt.banned.end(), t) != opt.banned.end(); };

  std::vector<Hyp> active;
  active.push_back({{}, 0.0, scorer.initial()});
  std::vector<BeamCandidate> finished;
  Ids text;

  for (int step = 0; step <= opt.max_len && !active.empty(); ++step) {
    std::vector<Cand> cands;
    for (int h = 0; h < static_cast<int>(active.size()); ++h) {
      const Eigen::VectorXd& lp = scorer.log_probs(active[h].state);
      if (opt.block_trigrams) {
        text = opt.history;
        for (int t : active[h].tokens)
          if (is_text_token(t)) text.push_back(t);
      }
      for (int tok = 0; tok < lp.size(); ++tok) {
        if (is_banned(tok)) continue;
        if (step == opt.max_len && !is_terminator(tok)) continue;
        if (opt.block_trigrams && is_text_token(tok) && block_trigrams(text, tok)) continue;
        cands.push_back({h, tok, active[h].logprob + lp[tok]});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.logprob > b.logprob; });

    std::vector<Hyp> next;
    for (int rank = 0; rank < static_cast<int>(cands.size()); ++rank) {
      const Cand& c = cands[rank];
      if (is_terminator(c.token)) {
        if (rank < opt.beam_size) {
          Ids toks = active[c.hyp].tokens;
          toks.push_back(c.token);
          double score = length_normalized(c.logprob, toks.size(), opt.alpha);
          finished.push_back({std::move(toks), c.logprob, score});
        }
        continue;
      }
      if (static_cast<int>(next.size()) >= opt.beam_size) continue;
      Ids toks = active[c.hyp].tokens;
      toks.push_back(c.token);
      next.push_back({std::move(toks), c.logprob, scorer.advance(active[c.hyp].state, c.token)});
      if (static_cast<int>(next.size()) >= opt.beam_size && rank + 1 >= opt.beam_size) break;
    }
    active = std::move(next);
    if (static_cast<int>(finished.size()) >= opt.beam_size) break;
  }

  std::stable_sort(finished.begin(), finished.end(), [](const BeamCandidate& a, const BeamCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.logprob > b.logprob;
  });
  return finished;
}

// Adapter for scorers that recompute from the full prefix (toy models, tests).
class PrefixScorer {
 public:
  struct State {
    Ids prefix;
    Eigen::VectorXd log_probs;
  };
  explicit PrefixScorer(std::function<Eigen::VectorXd(std::span<const int>)> fn) : fn_(std::move(fn)) {}
  State initial() { return {{}, fn_({})}; }
  const Eigen::VectorXd& log_probs(const State& s) { return s.log_probs; }
  State advance(const State& s, int token) {
    State n{s.prefix, {}};
    n.prefix.push_back(token);
    n.log_probs = fn_(n.prefix);
    return n;
  }

 private:
  std::function<Eigen::VectorXd(std::span<const int>)> fn_;
};

// Step-by-step sentence decoder over plain matrices. Keeps the last k-1 inputs
// of every conv layer so each new token costs one position per layer; the
// result matches Model::decode_sentence on the same prefix.
class IncrementalDecoder {
 public:
  struct State {
    std::vector<Eigen::MatrixXd> windows;  // per layer: (k-1) x d most recent inputs
    int position = 0;                      // number of inputs consumed
    Eigen::VectorXd log_probs;
  };

  IncrementalDecoder(const Model& model, Eigen::MatrixXd enc_z, Eigen::MatrixXd enc_values,
                     std::optional<Eigen::RowVectorXd> sentence_vector, std::optional<int> sentence);

  State initial();  // consumes SOS
  const Eigen::VectorXd& log_probs(const State& s) { return s.log_probs; }
  State advance(const State& s, int token);

 private:
  void consume(State& s, int token) const;

  const Model& model_;
  Eigen::MatrixXd z_;
  Eigen::MatrixXd values_;
  std::optional<Eigen::RowVectorXd> s_;
  std::optional<int> sentence_;
  Eigen::RowVectorXd sentence_emb_;
};

struct GeneratedSummary {
  std::vector<Ids> sentences;
  Ids topics;          // predicted label per sentence step (structured+topic only)
  double score = 0;    // length-normalized log-probability of the committed tokens
  int sentence_steps = 0;
  int skipped = 0;     // steps whose candidates were all discarded as repeats
  bool stopped_by_eot = false;
  bool stopped_by_eod = false;

  Ids flat_tokens() const;
};

GeneratedSummary generate(const Model& model, const Ids& source, const DecodeConfig& config);

// Topic labels predicted by the document decoder for `steps` sentence steps.
Ids predict_topics(const Model& model, const Ids& source, int steps);

}  // namespace tgsum
