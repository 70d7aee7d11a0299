#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tgsum/autodiff.hpp"
#include "tgsum/corpus.hpp"
#include "tgsum/model.hpp"

namespace tgsum {

struct TrainConfig {
  double lr = 0.25;
  double momentum = 0.99;
  double clip = 0.1;
  double lr_decay = 0.1;  // multiplier applied when dev loss does not improve
  double min_lr = 1e-5;   // training stops once lr falls below this
  int batch_size = 32;
  int max_epochs = 50;
  int eval_every = 1;     // epochs between dev evaluations
  int dev_limit = 0;      // dev instances decoded for ROUGE; 0 = all
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
  int epoch = 0;
  long step = 0;
  double train_loss = 0;
  double train_token_loss = 0;
  double dev_loss = 0;
  double dev_r1 = 0;
  double dev_r2 = 0;
  double dev_rl = 0;
  double lr = 0;

  nlohmann::json to_json() const;
};

struct DevScores {
  double loss = 0;
  double r1 = 0;
  double r2 = 0;
  double rl = 0;
};

struct BatchResult {
  double loss = 0;        // mean total loss over the batch
  double token_loss = 0;  // mean token loss over the batch
  double grad_norm = 0;   // global norm before clipping
};

// Nesterov momentum SGD: v <- mu v + g; p <- p - lr (g + mu v).
class NesterovSgd {
 public:
  NesterovSgd(const ad::ParameterSet& params, double momentum);
  void step(ad::ParameterSet& params, const ad::Gradients& grads, double lr);
  const ad::Gradients& velocity() const { return velocity_; }

 private:
  double momentum_;
  ad::Gradients velocity_;
};

// Rescales `grads` so its global norm is at most `max_norm`. Returns the norm before clipping.
double clip_global_norm(ad::Gradients& grads, double max_norm);

// Mean loss and summed-then-averaged gradients of `batch`. Example `i` draws
// its dropout mask from a seed derived from (`dropout_seed`, i); a null seed
// disables dropout.
BatchResult batch_gradients(const Model& model, std::span<const Example* const> batch, ad::Gradients& grads,
                            std::optional<std::uint64_t> dropout_seed);

// Mean loss of the split without dropout.
double mean_loss(const Model& model, const std::vector<Example>& split);

// Batches of example indices bucketed by source length; batch order is shuffled by `seed`.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<Example>& examples, int batch_size,
                                                   std::uint64_t seed);

// Ids rendered as tokens for scoring without a vocabulary.
Tokens id_tokens(const Ids& ids);

// Greedy decoding plus ROUGE F against the reference summaries.
DevScores evaluate_dev(const Model& model, const std::vector<Example>& split, int limit = 0);

struct TrainResult {
  std::vector<EpochRecord> history;
  ad::ParameterSet best_params;
  int best_epoch = 0;
  bool lr_underflow = false;
};

struct TrainHooks {
  // Called after each epoch record is complete.
  std::function<void(const EpochRecord&)> on_epoch;
  // Called whenever the best model changes.
  std::function<void(const Model&, const EpochRecord&)> on_best;
};

// Trains `model` in place. The returned parameters are the dev-selected best.
TrainResult train(Model& model, const std::vector<Example>& train_split, const std::vector<Example>& dev_split,
                  const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace tgsum
