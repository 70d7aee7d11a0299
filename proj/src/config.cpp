#include "tgsum/config.hpp"

#include <cctype>
#include <cstdlib>

#include "tgsum/error.hpp"
#include "tgsum/io.hpp"

namespace tgsum {

using nlohmann::json;

namespace {

json limits_json(const CorpusLimits& c) {
  return {{"max_source_tokens", c.max_source_tokens},
          {"min_lead_tokens", c.min_lead_tokens},
          {"min_docs", c.min_docs},
          {"max_sentences", c.max_sentences},
          {"max_sentence_len", c.max_sentence_len},
          {"max_lead_sentence_len", c.max_lead_sentence_len},
          {"pivot_slope", c.pivot_slope},
          {"vocab_size", c.vocab_size}};
}

CorpusLimits limits_from(const json& j) {
  CorpusLimits c;
  c.max_source_tokens = j.value("max_source_tokens", c.max_source_tokens);
  c.min_lead_tokens = j.value("min_lead_tokens", c.min_lead_tokens);
  c.min_docs = j.value("min_docs", c.min_docs);
  c.max_sentences = j.value("max_sentences", c.max_sentences);
  c.max_sentence_len = j.value("max_sentence_len", c.max_sentence_len);
  c.max_lead_sentence_len = j.value("max_lead_sentence_len", c.max_lead_sentence_len);
  c.pivot_slope = j.value("pivot_slope", c.pivot_slope);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  return c;
}

json lda_json(const LdaOptions& o) {
  return {{"alpha", o.alpha}, {"eta", o.eta}, {"iterations", o.iterations}, {"seed", o.seed}};
}

LdaOptions lda_from(const json& j) {
  LdaOptions o;
  o.alpha = j.value("alpha", o.alpha);
  o.eta = j.value("eta", o.eta);
  o.iterations = j.value("iterations", o.iterations);
  o.seed = j.value("seed", o.seed);
  return o;
}

json decode_json(const DecodeConfig& d) {
  return {{"beam_size", d.beam_size},
          {"length_alpha", d.length_alpha},
          {"block_trigrams", d.block_trigrams},
          {"overlap_threshold", d.overlap_threshold},
          {"max_sentences", d.max_sentences},
          {"max_sentence_len", d.max_sentence_len}};
}

DecodeConfig decode_from(const json& j) {
  DecodeConfig d;
  d.beam_size = j.value("beam_size", d.beam_size);
  d.length_alpha = j.value("length_alpha", d.length_alpha);
  d.block_trigrams = j.value("block_trigrams", d.block_trigrams);
  d.overlap_threshold = j.value("overlap_threshold", d.overlap_threshold);
  d.max_sentences = j.value("max_sentences", d.max_sentences);
  d.max_sentence_len = j.value("max_sentence_len", d.max_sentence_len);
  return d;
}

std::string env_name(const std::string& prefix, const std::string& key) {
  std::string out = prefix + "_";
  for (char ch : key) out += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

}  // namespace

json RunConfig::to_json() const {
  return {{"paths",
           {{"raw_dir", paths.raw_dir.string()},
            {"corpus_dir", paths.corpus_dir.string()},
            {"vocab", paths.vocab.string()},
            {"topic_model", paths.topic_model.string()},
            {"checkpoint_dir", paths.checkpoint_dir.string()},
            {"output_dir", paths.output_dir.string()}}},
          {"corpus", limits_json(corpus)},
          {"lda", lda_json(lda)},
          {"topic_grid", topic_grid},
          {"model", model.to_json()},
          {"train", train.to_json()},
          {"decode", decode_json(decode)},
          {"synth", synth.to_json()},
          {"seed", seed}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  try {
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      c.paths.raw_dir = p.value("raw_dir", c.paths.raw_dir.string());
      c.paths.corpus_dir = p.value("corpus_dir", c.paths.corpus_dir.string());
      c.paths.vocab = p.value("vocab", c.paths.vocab.string());
      c.paths.topic_model = p.value("topic_model", c.paths.topic_model.string());
      c.paths.checkpoint_dir = p.value("checkpoint_dir", c.paths.checkpoint_dir.string());
      c.paths.output_dir = p.value("output_dir", c.paths.output_dir.string());
    }
    if (j.contains("corpus")) c.corpus = limits_from(j.at("corpus"));
    if (j.contains("lda")) c.lda = lda_from(j.at("lda"));
    if (j.contains("topic_grid")) c.topic_grid = j.at("topic_grid").get<std::vector<int>>();
    if (j.contains("model")) c.model = Hyperparams::from_json(j.at("model"));
    if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
    if (j.contains("decode")) c.decode = decode_from(j.at("decode"));
    if (j.contains("synth")) c.synth = SynthConfig::from_json(j.at("synth"));
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return c;
}

void RunConfig::validate() const {
  train.validate();
  decode.validate();
  synth.validate();
  if (topic_grid.empty()) throw ConfigError("topic_grid must not be empty");
  for (int k : topic_grid)
    if (k < 1) throw ConfigError("topic_grid entries must be >= 1");
  if (lda.alpha <= 0 || lda.eta <= 0 || lda.iterations < 0) throw ConfigError("invalid LDA options");
  if (corpus.max_source_tokens > model.max_source_positions)
    throw ConfigError("corpus.max_source_tokens exceeds model.max_source_positions");
  if (corpus.max_sentences > model.max_sentence_positions)
    throw ConfigError("corpus.max_sentences exceeds model.max_sentence_positions");
  if (corpus.max_sentence_len + 1 > model.max_token_positions)
    throw ConfigError("corpus.max_sentence_len + 1 exceeds model.max_token_positions");
}

void apply_env_overrides(json& j, const std::string& prefix) {
  if (!j.is_object()) return;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string name = env_name(prefix, it.key());
    if (it.value().is_object()) {
      apply_env_overrides(it.value(), name);
      continue;
    }
    const char* raw = std::getenv(name.c_str());
    if (!raw) continue;
    json parsed = json::parse(raw, nullptr, false);
    if (parsed.is_discarded() || (it.value().is_string() && !parsed.is_string())) {
      it.value() = std::string(raw);
    } else {
      it.value() = std::move(parsed);
    }
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json j = RunConfig{}.to_json();
  if (!path.empty()) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
    json file = json::parse(read_file(path), nullptr, false);
    if (file.is_discarded() || !file.is_object()) throw ConfigError(path.string() + ": not a JSON object");
    j.merge_patch(file);
  }
  apply_env_overrides(j);
  RunConfig c = RunConfig::from_json(j);
  c.validate();
  return c;
}

}  // namespace tgsum
