#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "tgsum/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kBinary = TGSUM_CLI_PATH;

struct Outcome {
  int code = -1;
  std::string err;
};

// Runs the CLI inside `dir` with stderr captured.
Outcome run(const fs::path& dir, const std::string& args) {
  fs::path err = dir / "stderr.txt";
  std::string cmd = "cd '" + dir.string() + "' && '" + kBinary.string() + "' " + args + " 2> '" + err.string() + "'";
  int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.err = fs::exists(err) ? tgsum::read_file(err) : "";
  return o;
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("tgsum_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* kConfig = R"({
  "synth": {"instances": 50, "seed": 5},
  "topic_grid": [4, 8],
  "lda": {"iterations": 60},
  "model": {"emb_dim": 16, "hidden_dim": 16, "enc_layers": 1, "dec_layers": 1, "dropout": 0.1},
  "train": {"max_epochs": 2, "batch_size": 8, "seed": 3},
  "decode": {"beam_size": 2}
})";

void run_pipeline(const fs::path& dir) {
  tgsum::write_file_atomic(dir / "run.json", kConfig);
  for (const char* step : {"synth", "preprocess", "train-topics", "annotate", "train"}) {
    Outcome o = run(dir, std::string("-c run.json ") + step);
    INFO(step << ": " << o.err);
    REQUIRE(o.code == 0);
  }
  Outcome g = run(dir, "-c run.json generate --checkpoint runs/model/best.ckpt --input data/corpus/test.labeled.jsonl "
                       "--out out.jsonl");
  INFO(g.err);
  REQUIRE(g.code == 0);
  Outcome e = run(dir, "-c run.json evaluate --system out.jsonl --reference data/corpus/test.summary.txt "
                       "--source data/corpus/test.source.txt --out report.json");
  INFO(e.err);
  REQUIRE(e.code == 0);
}

}  // namespace

TEST_CASE("a missing vocabulary is a data error naming the path") {
  fs::path dir = fresh_dir("missing");
  Outcome o = run(dir, "train-topics");
  CHECK(o.code == 3);
  CHECK(o.err.find("data/corpus/vocab.txt") != std::string::npos);
}

TEST_CASE("configuration problems exit with the config code") {
  fs::path dir = fresh_dir("config");
  CHECK(run(dir, "frobnicate").code == 2);
  CHECK(run(dir, "generate --input x").code == 2);
  tgsum::write_file_atomic(dir / "bad.json", R"({"train": {"lr": -1}})");
  Outcome o = run(dir, "-c bad.json synth");
  CHECK(o.code == 2);
  CHECK(o.err.find("lr") != std::string::npos);
  CHECK(run(dir, "-c nowhere.json synth").code == 2);
}

TEST_CASE("full pipeline runs and is byte-reproducible") {
  fs::path a = fresh_dir("run_a");
  fs::path b = fresh_dir("run_b");
  run_pipeline(a);
  run_pipeline(b);

  json report = json::parse(tgsum::read_file(a / "report.json"));
  auto lines = tgsum::read_lines(a / "out.jsonl");
  CHECK(report["instances"] == lines.size());
  for (const char* key : {"R1", "R2", "RL"}) {
    for (const char* part : {"P", "R", "F"}) {
      double v = report["mean"][key][part];
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  for (const auto& line : lines) {
    json rec = json::parse(line);
    CHECK(rec.contains("summary"));
    CHECK(rec["topics"].is_array());
  }
  for (const char* file : {"data/raw/synth.jsonl", "data/corpus/vocab.txt", "data/corpus/train.labeled.jsonl",
                           "data/topics/model.txt", "runs/model/train_log.jsonl", "runs/model/best.ckpt",
                           "out.jsonl", "report.json"}) {
    INFO(file);
    CHECK(tgsum::read_file(a / file) == tgsum::read_file(b / file));
  }

  Outcome wrong = run(a, "-c run.json generate --checkpoint runs/model/best.ckpt --input nope.jsonl --out x.jsonl");
  CHECK(wrong.code == 3);
  CHECK(wrong.err.find("nope.jsonl") != std::string::npos);
}
