#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tgsum/corpus.hpp"
#include "tgsum/inference.hpp"
#include "tgsum/model.hpp"
#include "tgsum/synth.hpp"
#include "tgsum/topics.hpp"
#include "tgsum/trainer.hpp"

namespace tgsum {

struct RunPaths {
  std::filesystem::path raw_dir = "data/raw";
  std::filesystem::path corpus_dir = "data/corpus";
  std::filesystem::path vocab = "data/corpus/vocab.txt";
  std::filesystem::path topic_model = "data/topics/model.txt";
  std::filesystem::path checkpoint_dir = "runs/model";
  std::filesystem::path output_dir = "runs/output";
};

// Everything a command needs. Loaded from a JSON file; any leaf can be
// overridden by an environment variable TGSUM_<SECTION>_<KEY> (upper case).
struct RunConfig {
  RunPaths paths;
  CorpusLimits corpus;
  LdaOptions lda;
  std::vector<int> topic_grid = default_topic_grid();
  Hyperparams model;
  TrainConfig train;
  DecodeConfig decode;
  SynthConfig synth;
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  void validate() const;
};

// Defaults, then `path` (when non-empty), then environment overrides.
RunConfig load_run_config(const std::filesystem::path& path);

// Applies TGSUM_* overrides to every leaf of `j`. Values parse as JSON when
// possible and as plain strings otherwise.
void apply_env_overrides(nlohmann::json& j, const std::string& prefix = "TGSUM");

}  // namespace tgsum
