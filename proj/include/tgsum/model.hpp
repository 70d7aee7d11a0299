#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tgsum/autodiff.hpp"
#include "tgsum/corpus.hpp"

namespace tgsum {

enum class DecoderMode { kFlat, kStructured, kStructuredTopic };

std::string_view to_string(DecoderMode mode);
DecoderMode parse_mode(std::string_view name);  // "flat" | "structured" | "structured+topic"

struct Hyperparams {
  int emb_dim = 256;
  int hidden_dim = 256;
  int enc_layers = 4;
  int dec_layers = 3;
  int kernel_width = 3;
  double dropout = 0.2;
  int max_source_positions = 800;
  int max_token_positions = 41;  // sentence tokens plus the terminator
  int max_sentence_positions = 15;
  int vocab_size = 0;
  int num_topics = 0;  // K; the topic head predicts K + 1 labels (last is EOT)
  DecoderMode mode = DecoderMode::kStructuredTopic;

  void validate() const;
  int dim() const { return emb_dim; }
  bool structured() const { return mode != DecoderMode::kFlat; }
  bool topic_head() const { return mode == DecoderMode::kStructuredTopic; }
  // Rows of the target token position table. Flat mode decodes the whole
  // summary as one sequence, so it needs room for every sentence.
  int token_table_rows() const;
  // Rows of the sentence position table: every sentence slot plus the
  // terminal end-of-document slot.
  int sentence_table_rows() const { return max_sentence_positions + 1; }

  nlohmann::json to_json() const;
  static Hyperparams from_json(const nlohmann::json& j);
  bool operator==(const Hyperparams&) const = default;
};

struct EncoderOutput {
  ad::Var z;       // |X| x d encoder states
  ad::Var e_src;   // |X| x d input element embeddings (word + position)
  ad::Var values;  // z + e_src, attended by the sentence decoder
  int length = 0;
};

struct DocState {
  ad::Var h;       // 1 x d LSTM hidden state
  ad::Var c;       // 1 x d LSTM cell state
  ad::Var s_prev;  // 1 x d previous sentence vector
  int t = 1;       // index of the next sentence step (1-based)
};

struct Attention {
  ad::Var context;
  ad::Var weights;
};

struct DocStep {
  DocState state;
  ad::Var s;        // sentence vector s_t
  ad::Var weights;  // document-level attention over the source
};

struct DecoderLayer {
  ad::Var o;         // conv output
  ad::Var combined;  // o + s_t + c
  ad::Var context;
  ad::Var weights;
};

struct SentenceOutput {
  ad::Var logits;  // n x V
  std::vector<DecoderLayer> layers;
};

struct LossBreakdown {
  ad::Var total;
  double token_nll = 0;  // mean over target tokens
  double topic_nll = 0;  // mean over sentence steps (0 without topic head)
  int tokens = 0;
};

// Target sequences used for training and decoding.
// Structured: one slot per sentence (tokens + EOS) followed by a final [EOD] slot.
std::vector<Ids> structured_targets(const Example& ex);
// Flat: every sentence followed by EOS, then EOD.
Ids flat_target(const Example& ex);
// Teacher-forcing input: SOS followed by the target without its last token.
Ids decoder_input(const Ids& target);

class Model {
 public:
  Model(const Hyperparams& hp, std::uint64_t seed);
  Model(const Hyperparams& hp, ad::ParameterSet params);

  const Hyperparams& hparams() const { return hp_; }
  ad::ParameterSet& params() { return params_; }
  const ad::ParameterSet& params() const { return params_; }

  // `dropout_rng` null disables dropout.
  EncoderOutput encode(ad::Graph& g, std::span<const int> source, Rng* dropout_rng = nullptr) const;

  DocState doc_init(ad::Graph& g, const EncoderOutput& enc) const;
  Attention doc_attend(ad::Graph& g, ad::Var h, const EncoderOutput& enc) const;
  DocStep doc_step(ad::Graph& g, const DocState& state, const EncoderOutput& enc) const;

  ad::Var topic_logits(ad::Graph& g, ad::Var s) const;
  ad::Var topic_distribution(ad::Graph& g, ad::Var s) const;

  // w_ti = emb(y_ti) + e_i (+ e_t when `sentence` is set), positions 1..n.
  ad::Var embed_target(ad::Graph& g, std::span<const int> ids, std::optional<int> sentence) const;

  // Multi-step attention of layer `layer`; `s` omitted reproduces the flat decoder.
  Attention sent_attend(ad::Graph& g, ad::Var o, std::optional<ad::Var> s, ad::Var target_emb,
                        const EncoderOutput& enc, int layer) const;
  DecoderLayer sent_decode_layer(ad::Graph& g, ad::Var prev, std::optional<ad::Var> s, ad::Var target_emb,
                                 const EncoderOutput& enc, int layer, Rng* dropout_rng = nullptr) const;
  ad::Var token_logits(ad::Graph& g, ad::Var o, ad::Var c) const;

  // Full sentence-level decoder over teacher-forced `input_ids`.
  SentenceOutput decode_sentence(ad::Graph& g, std::span<const int> input_ids, std::optional<ad::Var> s,
                                 std::optional<int> sentence, const EncoderOutput& enc,
                                 Rng* dropout_rng = nullptr) const;

  LossBreakdown forward_loss(ad::Graph& g, const Example& ex, Rng* dropout_rng = nullptr) const;

 private:
  void create_parameters();
  void initialize(std::uint64_t seed);

  Hyperparams hp_;
  ad::ParameterSet params_;
};

// Versioned binary container: magic, version, JSON header (hyperparameters,
// vocab hash, parameter names and shapes), then little-endian float64 payload.
struct Checkpoint {
  Hyperparams hparams;
  std::uint64_t vocab_hash = 0;
  nlohmann::json meta = nlohmann::json::object();
  ad::ParameterSet params;
};

void save_checkpoint(const std::filesystem::path& path, const Model& model, std::uint64_t vocab_hash,
                     const nlohmann::json& meta = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& path);
Model model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace tgsum
