// tgsum: command-line entry point for the summarization pipeline.
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tgsum/config.hpp"
#include "tgsum/error.hpp"
#include "tgsum/io.hpp"
#include "tgsum/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tgsum;

namespace {

const std::vector<std::string> kSplits = {"train", "valid", "test"};

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw DataError(what + " not found: " + p.string());
}

std::string text_of(const Vocab& vocab, const Ids& ids) { return join(vocab.decode(ids)); }

std::string summary_text(const Vocab& vocab, const std::vector<Ids>& sentences) {
  std::vector<std::string> parts;
  for (const auto& s : sentences) parts.push_back(text_of(vocab, s));
  return join(parts);
}

std::string lines_of(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

void log(const std::string& msg) { std::cerr << "[tgsum] " << msg << "\n"; }

// ---------------------------------------------------------------------------

void cmd_synth(const RunConfig& cfg) {
  SynthCorpus corpus = synthesize(cfg.synth);
  std::vector<std::string> records;
  std::vector<std::string> truth;
  for (const auto& inst : corpus.instances) {
    records.push_back(raw_to_json_line(inst));
    truth.push_back(json(inst.topics).dump());
  }
  write_file_atomic(cfg.paths.raw_dir / "synth.jsonl", lines_of(records));
  write_file_atomic(cfg.paths.raw_dir / "synth.topics.txt", lines_of(truth));
  json meta = {{"synth", cfg.synth.to_json()}, {"seed", cfg.synth.seed}, {"topic_words", corpus.topic_words}};
  write_file_atomic(cfg.paths.raw_dir / "synth.meta.json", meta.dump(2) + "\n");
  log("wrote " + std::to_string(records.size()) + " synthetic instances to " + cfg.paths.raw_dir.string());
}

void cmd_preprocess(const RunConfig& cfg) {
  auto raw = read_raw_dir(cfg.paths.raw_dir);
  std::vector<TextExample> kept;
  std::map<std::string, int> rejected;
  for (const auto& inst : raw) {
    RejectReason reason;
    auto ex = make_example(inst, cfg.corpus, &reason);
    if (ex) {
      kept.push_back(std::move(*ex));
    } else {
      ++rejected[std::string(to_string(reason))];
    }
  }
  if (kept.empty()) throw DataError("no instance survived filtering in " + cfg.paths.raw_dir.string());
  std::vector<Tokens> titles;
  for (const auto& ex : kept) titles.push_back(ex.title);
  SplitIndices idx = assign_splits(titles);

  std::vector<TextExample> train_text;
  for (auto i : idx.train) train_text.push_back(kept[i]);
  Vocab vocab = build_vocab(train_text, cfg.corpus.vocab_size);
  vocab.save(cfg.paths.vocab);

  const std::vector<const std::vector<std::size_t>*> parts = {&idx.train, &idx.valid, &idx.test};
  json stats = {{"input", raw.size()}, {"kept", kept.size()}, {"rejected", rejected}, {"seed", cfg.seed}};
  for (std::size_t s = 0; s < kSplits.size(); ++s) {
    std::vector<Example> examples;
    std::vector<std::string> summaries, sources;
    for (auto i : *parts[s]) {
      const TextExample& t = kept[i];
      examples.push_back(encode_example(t, vocab));
      std::vector<std::string> sents;
      for (const auto& sent : t.summary) sents.push_back(join(sent));
      summaries.push_back(join(sents));
      sources.push_back(join(t.source));
    }
    write_split(cfg.paths.corpus_dir / (kSplits[s] + ".jsonl"), examples);
    write_file_atomic(cfg.paths.corpus_dir / (kSplits[s] + ".summary.txt"), lines_of(summaries));
    write_file_atomic(cfg.paths.corpus_dir / (kSplits[s] + ".source.txt"), lines_of(sources));
    stats[kSplits[s]] = examples.size();
  }
  stats["vocab_size"] = vocab.size();
  write_file_atomic(cfg.paths.corpus_dir / "preprocess.json", stats.dump(2) + "\n");
  log("kept " + std::to_string(kept.size()) + " of " + std::to_string(raw.size()) + " instances");
}

std::vector<Tokens> summary_sentences(const std::vector<Example>& examples, const Vocab& vocab) {
  std::vector<Tokens> docs;
  for (const auto& ex : examples)
    for (const auto& s : ex.sentences) docs.push_back(topic_terms(vocab.decode(s)));
  return docs;
}

void cmd_train_topics(const RunConfig& cfg) {
  require_file(cfg.paths.vocab, "vocab");
  Vocab vocab = Vocab::load(cfg.paths.vocab);
  auto train = read_split(cfg.paths.corpus_dir / "train.jsonl");
  auto docs = summary_sentences(train, vocab);
  LdaOptions opts = cfg.lda;
  auto candidates = grid_search_topics(docs, cfg.topic_grid, opts);
  if (candidates.empty()) throw DataError("topic grid produced no model");
  const TopicModel& best = candidates.front().model;
  best.save(cfg.paths.topic_model);
  fs::path base = cfg.paths.topic_model;
  write_file_atomic(base.string() + ".summary.txt", topic_summary(best));
  json grid = json::array();
  for (const auto& c : candidates) grid.push_back({{"K", c.num_topics}, {"coherence", c.coherence.mean}});
  json report = {{"selected_K", best.num_topics}, {"grid", grid}, {"seed", opts.seed}};
  write_file_atomic(base.string() + ".grid.json", report.dump(2) + "\n");
  log("selected K = " + std::to_string(best.num_topics));
}

void cmd_annotate(const RunConfig& cfg) {
  require_file(cfg.paths.vocab, "vocab");
  require_file(cfg.paths.topic_model, "topic model");
  Vocab vocab = Vocab::load(cfg.paths.vocab);
  TopicModel model = TopicModel::load(cfg.paths.topic_model);
  for (const auto& name : kSplits) {
    auto examples = read_split(cfg.paths.corpus_dir / (name + ".jsonl"));
    label_examples(model, vocab, examples);
    write_split(cfg.paths.corpus_dir / (name + ".labeled.jsonl"), examples);
  }
  log("annotated splits with K = " + std::to_string(model.num_topics));
}

void cmd_train(const RunConfig& cfg) {
  require_file(cfg.paths.vocab, "vocab");
  Vocab vocab = Vocab::load(cfg.paths.vocab);
  Hyperparams hp = cfg.model;
  hp.vocab_size = vocab.size();
  std::string suffix = ".jsonl";
  if (hp.topic_head()) {
    require_file(cfg.paths.topic_model, "topic model");
    hp.num_topics = TopicModel::load(cfg.paths.topic_model).num_topics;
    suffix = ".labeled.jsonl";
  }
  auto train_split = read_split(cfg.paths.corpus_dir / ("train" + suffix));
  auto dev_split = read_split(cfg.paths.corpus_dir / ("valid" + suffix));
  TrainConfig tc = cfg.train;
  Model model(hp, mix_seed(tc.seed, 0x6d6f64656cULL));

  const fs::path dir = cfg.paths.checkpoint_dir;
  std::string log_text;
  json meta = {{"train", tc.to_json()}, {"seed", tc.seed}};
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r) {
    log_text += r.to_json().dump() + "\n";
    write_file_atomic(dir / "train_log.jsonl", log_text);
    log("epoch " + std::to_string(r.epoch) + " loss " + std::to_string(r.train_loss) + " dev RL " +
        std::to_string(r.dev_rl));
  };
  hooks.on_best = [&](const Model& m, const EpochRecord& r) {
    json m2 = meta;
    m2["epoch"] = r.epoch;
    save_checkpoint(dir / "best.ckpt", m, vocab.hash(), m2);
  };
  TrainResult res = train(model, train_split, dev_split, tc, hooks);
  json summary = {{"best_epoch", res.best_epoch}, {"epochs", res.history.size()}, {"lr_underflow", res.lr_underflow},
                  {"seed", tc.seed}};
  write_file_atomic(dir / "train_summary.json", summary.dump(2) + "\n");
}

void cmd_generate(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& input, const fs::path& out) {
  require_file(checkpoint, "checkpoint");
  require_file(input, "input");
  require_file(cfg.paths.vocab, "vocab");
  Vocab vocab = Vocab::load(cfg.paths.vocab);
  Checkpoint ck = load_checkpoint(checkpoint);
  if (ck.vocab_hash != vocab.hash())
    throw DataError("vocab " + cfg.paths.vocab.string() + " does not match checkpoint " + checkpoint.string());
  Model model = model_from_checkpoint(ck);
  auto examples = read_split(input);
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    GeneratedSummary g = generate(model, examples[i].source, cfg.decode);
    json rec;
    rec["id"] = i;
    rec["summary"] = summary_text(vocab, g.sentences);
    json sents = json::array();
    for (const auto& s : g.sentences) sents.push_back(text_of(vocab, s));
    rec["sentences"] = sents;
    if (model.hparams().topic_head()) rec["topics"] = g.topics;
    rec["score"] = g.score;
    rec["empty"] = g.sentences.empty();
    lines.push_back(rec.dump());
  }
  write_file_atomic(out, lines_of(lines));
  log("wrote " + std::to_string(lines.size()) + " summaries to " + out.string());
}

// Plain text lines, or JSONL records carrying a "summary" field.
std::vector<Tokens> read_texts(const fs::path& path) {
  require_file(path, "input");
  std::vector<Tokens> out;
  for (const auto& line : read_lines(path)) {
    if (!line.empty() && line.front() == '{') {
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("summary")) throw DataError(path.string() + ": malformed summary record");
      out.push_back(tokenize(j.at("summary").get<std::string>()));
    } else {
      out.push_back(tokenize(line));
    }
  }
  return out;
}

void cmd_evaluate(const RunConfig& cfg, const fs::path& system, const fs::path& reference, const fs::path& source,
                  const fs::path& out) {
  auto sys = read_texts(system);
  auto ref = read_texts(reference);
  auto src = read_texts(source);
  MetricReport report = evaluate_corpus(sys, ref, src);
  json j = report.to_json();
  j["seed"] = cfg.seed;
  write_file_atomic(out, j.dump(2) + "\n");
  log("R1 " + std::to_string(report.mean.r1.f) + " R2 " + std::to_string(report.mean.r2.f) + " RL " +
      std::to_string(report.mean.rl.f));
}

int run(int argc, char** argv) {
  CLI::App app{"Topic-guided multi-document summarization"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("-c,--config", config_path, "JSON run configuration");

  auto* synth = app.add_subcommand("synth", "Write a synthetic template corpus to paths.raw_dir");
  auto* preprocess = app.add_subcommand("preprocess", "Build splits and vocabulary from paths.raw_dir");
  auto* topics = app.add_subcommand("train-topics", "Fit LDA topic templates on training summaries");
  auto* annotate = app.add_subcommand("annotate", "Label summary sentences with topics");
  auto* trainc = app.add_subcommand("train", "Train the summarization model");

  auto* gen = app.add_subcommand("generate", "Generate summaries");
  std::string checkpoint, input, gen_out;
  std::optional<int> beam, max_sentences;
  std::optional<double> alpha;
  std::optional<bool> block;
  gen->add_option("--checkpoint", checkpoint)->required();
  gen->add_option("--input", input)->required();
  gen->add_option("--out", gen_out)->required();
  gen->add_option("--beam", beam);
  gen->add_option("--alpha", alpha);
  gen->add_option("--max-sentences", max_sentences);
  gen->add_flag("--block-trigrams,!--no-block-trigrams", block);

  auto* eval = app.add_subcommand("evaluate", "Score system summaries");
  std::string system, reference, source, eval_out;
  eval->add_option("--system", system)->required();
  eval->add_option("--reference", reference)->required();
  eval->add_option("--source", source)->required();
  eval->add_option("--out", eval_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::kConfig);
  }

  RunConfig cfg = load_run_config(config_path);
  if (*synth) cmd_synth(cfg);
  if (*preprocess) cmd_preprocess(cfg);
  if (*topics) cmd_train_topics(cfg);
  if (*annotate) cmd_annotate(cfg);
  if (*trainc) cmd_train(cfg);
  if (*gen) {
    if (beam) cfg.decode.beam_size = *beam;
    if (alpha) cfg.decode.length_alpha = *alpha;
    if (max_sentences) cfg.decode.max_sentences = *max_sentences;
    if (block) cfg.decode.block_trigrams = *block;
    cfg.decode.validate();
    cmd_generate(cfg, checkpoint, input, gen_out);
  }
  if (*eval) cmd_evaluate(cfg, system, reference, source, eval_out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "tgsum: error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "tgsum: data error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kData);
  } catch (const std::exception& e) {
    std::cerr << "tgsum: error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kData);
  }
}
