#pragma once

#include <map>
#include <vector>

#include "tgsum/corpus.hpp"
#include "tgsum/io.hpp"
#include "tgsum/model.hpp"

namespace tgsum::testing {

inline Hyperparams tiny_hparams(DecoderMode mode, int vocab = 20, int topics = 3) {
  Hyperparams hp;
  hp.emb_dim = 8;
  hp.hidden_dim = 8;
  hp.enc_layers = 2;
  hp.dec_layers = 2;
  hp.kernel_width = 3;
  hp.dropout = 0.0;
  hp.max_source_positions = 16;
  hp.max_token_positions = 8;
  hp.max_sentence_positions = 4;
  hp.vocab_size = vocab;
  hp.num_topics = topics;
  hp.mode = mode;
  return hp;
}

inline int random_token(Rng& rng, int vocab) {
  return kNumSpecials + static_cast<int>(rng() % static_cast<std::uint64_t>(vocab - kNumSpecials));
}

inline Example random_example(Rng& rng, int vocab, int source_len, int sentences, int sentence_len, int topics) {
  Example ex;
  for (int i = 0; i < source_len; ++i) ex.source.push_back(random_token(rng, vocab));
  for (int s = 0; s < sentences; ++s) {
    Ids sent;
    for (int i = 0; i < sentence_len; ++i) sent.push_back(random_token(rng, vocab));
    ex.sentences.push_back(sent);
    ex.topic_labels.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(topics)));
  }
  ex.topic_labels.push_back(topics);
  return ex;
}

// True when some trigram occurs twice in `text`.
inline bool has_repeated_trigram(const Ids& text) {
  std::map<std::vector<int>, int> seen;
  for (std::size_t i = 0; i + 2 < text.size(); ++i)
    if (++seen[{text[i], text[i + 1], text[i + 2]}] > 1) return true;
  return false;
}

}  // namespace tgsum::testing
