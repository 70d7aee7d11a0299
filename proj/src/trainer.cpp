#include "tgsum/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "tgsum/error.hpp"
#include "tgsum/inference.hpp"
#include "tgsum/metrics.hpp"

namespace tgsum {

void TrainConfig::validate() const {
  if (!(lr > 0)) throw ConfigError("lr must be > 0");
  if (!(clip > 0)) throw ConfigError("clip must be > 0");
  if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must be in [0, 1)");
  if (!(lr_decay > 0 && lr_decay < 1)) throw ConfigError("lr_decay must be in (0, 1)");
  if (min_lr < 0) throw ConfigError("min_lr must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (dev_limit < 0) throw ConfigError("dev_limit must be >= 0");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"lr", lr},           {"momentum", momentum},     {"clip", clip},
          {"lr_decay", lr_decay}, {"min_lr", min_lr},         {"batch_size", batch_size},
          {"max_epochs", max_epochs}, {"eval_every", eval_every}, {"dev_limit", dev_limit},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.lr = j.value("lr", c.lr);
  c.momentum = j.value("momentum", c.momentum);
  c.clip = j.value("clip", c.clip);
  c.lr_decay = j.value("lr_decay", c.lr_decay);
  c.min_lr = j.value("min_lr", c.min_lr);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.dev_limit = j.value("dev_limit", c.dev_limit);
  c.seed = j.value("seed", c.seed);
  return c;
}

nlohmann::json EpochRecord::to_json() const {
  return {{"epoch", epoch},   {"step", step},     {"train_loss", train_loss}, {"train_token_loss", train_token_loss},
          {"dev_loss", dev_loss}, {"dev_R1", dev_r1}, {"dev_R2", dev_r2},       {"dev_RL", dev_rl},
          {"lr", lr}};
}

NesterovSgd::NesterovSgd(const ad::ParameterSet& params, double momentum)
    : momentum_(momentum), velocity_(params) {}

void NesterovSgd::step(ad::ParameterSet& params, const ad::Gradients& grads, double lr) {
  for (int i = 0; i < params.size(); ++i) {
    velocity_[i] = momentum_ * velocity_[i] + grads[i];
    params[i].value -= lr * (grads[i] + momentum_ * velocity_[i]);
  }
}

double clip_global_norm(ad::Gradients& grads, double max_norm) {
  const double norm = grads.norm();
  if (norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

BatchResult batch_gradients(const Model& model, std::span<const Example* const> batch, ad::Gradients& grads,
                            std::optional<std::uint64_t> dropout_seed) {
  if (batch.empty()) throw ConfigError("batch_gradients: empty batch");
  grads.zero();
  BatchResult out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    ad::Graph g(model.params(), &grads);
    std::optional<Rng> rng;
    if (dropout_seed) rng.emplace(mix_seed(*dropout_seed, i));
    LossBreakdown loss = model.forward_loss(g, *batch[i], rng ? &*rng : nullptr);
    out.loss += g.scalar(loss.total);
    out.token_loss += loss.token_nll;
    g.backward(loss.total);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  grads.scale(inv);
  out.loss *= inv;
  out.token_loss *= inv;
  out.grad_norm = grads.norm();
  return out;
}

double mean_loss(const Model& model, const std::vector<Example>& split) {
  if (split.empty()) return 0.0;
  double total = 0;
  for (const auto& ex : split) {
    ad::Graph g(model.params());
    total += g.scalar(model.forward_loss(g, ex).total);
  }
  return total / static_cast<double>(split.size());
}

std::vector<std::vector<std::size_t>> make_batches(const std::vector<Example>& examples, int batch_size,
                                                   std::uint64_t seed) {
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return examples[a].source.size() < examples[b].source.size();
  });
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size)) {
    std::size_t end = std::min(order.size(), i + static_cast<std::size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  Rng rng(seed);
  for (std::size_t i = batches.size(); i > 1; --i) std::swap(batches[i - 1], batches[rng() % i]);
  return batches;
}

Tokens id_tokens(const Ids& ids) {
  Tokens out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(std::to_string(id));
  return out;
}

DevScores evaluate_dev(const Model& model, const std::vector<Example>& split, int limit) {
  DevScores out;
  if (split.empty()) return out;
  out.loss = mean_loss(model, split);
  const std::size_t n = limit > 0 ? std::min(split.size(), static_cast<std::size_t>(limit)) : split.size();
  DecodeConfig dc;
  dc.beam_size = 1;
  for (std::size_t i = 0; i < n; ++i) {
    const Example& ex = split[i];
    Tokens hyp = id_tokens(generate(model, ex.source, dc).flat_tokens());
    Ids ref_ids;
    for (const auto& s : ex.sentences) ref_ids.insert(ref_ids.end(), s.begin(), s.end());
    Tokens ref = id_tokens(ref_ids);
    out.r1 += rouge_n(hyp, ref, 1).f;
    out.r2 += rouge_n(hyp, ref, 2).f;
    out.rl += rouge_l(hyp, ref).f;
  }
  out.r1 /= static_cast<double>(n);
  out.r2 /= static_cast<double>(n);
  out.rl /= static_cast<double>(n);
  return out;
}

namespace {

std::string describe_batch(const std::vector<std::size_t>& ids, double grad_norm) {
  std::ostringstream os;
  os << "non-finite loss or gradient in batch [";
  for (std::size_t i = 0; i < ids.size(); ++i) os << (i ? "," : "") << ids[i];
  os << "], gradient norm " << grad_norm;
  return os.str();
}

}  // namespace

TrainResult train(Model& model, const std::vector<Example>& train_split, const std::vector<Example>& dev_split,
                  const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (train_split.empty()) throw DataError("training split is empty");
  const auto& hp = model.hparams();
  if (hp.topic_head())
    for (const auto& ex : train_split)
      if (ex.topic_labels.size() != ex.sentences.size() + 1)
        throw DataError("structured+topic training needs an annotated corpus");

  TrainResult result;
  result.best_params = model.params();
  NesterovSgd opt(model.params(), config.momentum);
  ad::Gradients grads(model.params());
  double lr = config.lr;
  double best_rl = -1;
  double best_sel_loss = std::numeric_limits<double>::infinity();
  double best_dev_loss = std::numeric_limits<double>::infinity();
  long step = 0;
  std::vector<const Example*> batch;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const std::uint64_t epoch_seed = mix_seed(config.seed, static_cast<std::uint64_t>(epoch));
    auto batches = make_batches(train_split, config.batch_size, epoch_seed);
    double loss_sum = 0;
    double token_sum = 0;
    for (const auto& ids : batches) {
      batch.clear();
      for (std::size_t i : ids) batch.push_back(&train_split[i]);
      BatchResult r = batch_gradients(model, batch, grads, mix_seed(epoch_seed, static_cast<std::uint64_t>(step)));
      if (!std::isfinite(r.loss) || !std::isfinite(r.grad_norm)) throw NumericError(describe_batch(ids, r.grad_norm));
      clip_global_norm(grads, config.clip);
      opt.step(model.params(), grads, lr);
      ++step;
      loss_sum += r.loss * static_cast<double>(ids.size());
      token_sum += r.token_loss * static_cast<double>(ids.size());
    }
    if (!model.params().all_finite()) throw NumericError("parameters became non-finite in epoch " + std::to_string(epoch));

    EpochRecord rec;
    rec.epoch = epoch;
    rec.step = step;
    rec.train_loss = loss_sum / static_cast<double>(train_split.size());
    rec.train_token_loss = token_sum / static_cast<double>(train_split.size());
    rec.lr = lr;
    const bool evaluate = epoch % config.eval_every == 0 || epoch == config.max_epochs;
    if (evaluate) {
      const auto& sel = dev_split.empty() ? train_split : dev_split;
      DevScores dev = evaluate_dev(model, sel, config.dev_limit);
      rec.dev_loss = dev.loss;
      rec.dev_r1 = dev.r1;
      rec.dev_r2 = dev.r2;
      rec.dev_rl = dev.rl;
      if (!std::isfinite(dev.loss)) throw NumericError("non-finite dev loss in epoch " + std::to_string(epoch));
      if (dev.rl > best_rl || (dev.rl == best_rl && dev.loss < best_sel_loss)) {
        best_rl = dev.rl;
        best_sel_loss = dev.loss;
        result.best_params = model.params();
        result.best_epoch = epoch;
        if (hooks.on_best) hooks.on_best(model, rec);
      }
      if (dev.loss < best_dev_loss) {
        best_dev_loss = dev.loss;
      } else {
        lr *= config.lr_decay;
      }
    }
    result.history.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
    if (lr < config.min_lr) {
      result.lr_underflow = true;
      break;
    }
  }
  for (int i = 0; i < model.params().size(); ++i) model.params()[i].value = result.best_params[i].value;
  return result;
}

}  // namespace tgsum
