#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "tgsum/config.hpp"
#include "tgsum/error.hpp"
#include "tgsum/io.hpp"

using namespace tgsum;
namespace fs = std::filesystem;

namespace {

fs::path write_config(const std::string& name, const std::string& body) {
  fs::path p = fs::temp_directory_path() / ("tgsum_unit_" + name + ".json");
  write_file_atomic(p, body);
  return p;
}

}  // namespace

TEST_CASE("defaults validate and survive a json round trip") {
  RunConfig c = load_run_config({});
  CHECK(c.train.lr == 0.25);
  CHECK(c.decode.beam_size == 5);
  CHECK(c.lda.alpha == 0.001);
  RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
}

TEST_CASE("file values merge over defaults") {
  auto p = write_config("merge", R"({"train": {"batch_size": 4}, "paths": {"vocab": "v.txt"}, "seed": 9})");
  RunConfig c = load_run_config(p);
  CHECK(c.train.batch_size == 4);
  CHECK(c.train.lr == 0.25);
  CHECK(c.paths.vocab == fs::path("v.txt"));
  CHECK(c.paths.raw_dir == fs::path("data/raw"));
  CHECK(c.seed == 9);
}

TEST_CASE("environment overrides apply after the file") {
  auto p = write_config("env", R"({"decode": {"beam_size": 3}})");
  setenv("TGSUM_DECODE_BEAM_SIZE", "7", 1);
  setenv("TGSUM_PATHS_OUTPUT_DIR", "out/dir", 1);
  setenv("TGSUM_PATHS_VOCAB", "123", 1);
  RunConfig c = load_run_config(p);
  unsetenv("TGSUM_DECODE_BEAM_SIZE");
  unsetenv("TGSUM_PATHS_OUTPUT_DIR");
  unsetenv("TGSUM_PATHS_VOCAB");
  CHECK(c.decode.beam_size == 7);
  CHECK(c.paths.output_dir == fs::path("out/dir"));
  CHECK(c.paths.vocab == fs::path("123"));
}

TEST_CASE("bad configuration raises config errors") {
  CHECK_THROWS_AS(load_run_config("/nonexistent/tgsum.json"), ConfigError);
  CHECK_THROWS_AS(load_run_config(write_config("notjson", "{oops")), ConfigError);
  CHECK_THROWS_AS(load_run_config(write_config("array", "[1]")), ConfigError);
  CHECK_THROWS_AS(load_run_config(write_config("type", R"({"train": {"lr": "fast"}})")), ConfigError);
  CHECK_THROWS_AS(load_run_config(write_config("range", R"({"train": {"lr": -1}})")), ConfigError);
  CHECK_THROWS_AS(load_run_config(write_config("grid", R"({"topic_grid": []})")), ConfigError);
  CHECK_THROWS_AS(load_run_config(write_config("limits", R"({"corpus": {"max_sentences": 20}})")), ConfigError);
  setenv("TGSUM_TRAIN_BATCH_SIZE", "0", 1);
  CHECK_THROWS_AS(load_run_config({}), ConfigError);
  unsetenv("TGSUM_TRAIN_BATCH_SIZE");
}
