#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tgsum/corpus.hpp"

namespace tgsum {

// Template corpus with known sentence topics. The category word in the title
// fixes the sentence count and the topic order; sentence t is written from the
// template of the t-th topic of that order. Sentences vary in length and end in
// a tail of shared words and slot values, so neither the target position nor
// the last few tokens reveal the sentence index. All slot values of an instance
// sit in one shuffled source paragraph and can be copied from there.
struct SynthConfig {
  int instances = 50;
  int topics = 10;
  int min_sentences = 3;
  int max_sentences = 8;   // <= topics
  int categories = 12;     // category c has min_sentences + c % (count range) sentences
  int max_optional = 4;    // optional template words per sentence: uniform in [0, max_optional]
  int max_tail_slots = 2;  // "and SLOT" repeats per sentence: uniform in [1, max_tail_slots]
  int slot_pool = 200;     // slot values shared by all topics
  int entities = 400;
  int noise_words = 120;
  int noise_paragraphs = 5;
  int paragraph_noise = 8;  // words per noise paragraph
  std::uint64_t seed = 7;

  void validate() const;
  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

struct SynthInstance {
  RawInstance raw;
  std::string title;
  std::vector<std::string> paragraphs;
  Ids topics;  // ground-truth topic of each summary sentence
};

struct SynthCorpus {
  std::vector<SynthInstance> instances;
  std::vector<std::vector<std::string>> topic_words;  // exclusive template words per topic
};

SynthCorpus synthesize(const SynthConfig& config);

// Raw input record {title, paragraphs, lead, docs}.
std::string raw_to_json_line(const SynthInstance& inst);

// Examples encoded with a vocabulary built over all of them and labeled with
// the ground-truth topics (EOT = number of topics).
struct SynthDataset {
  Vocab vocab;
  std::vector<Example> examples;
};
SynthDataset build_synth_dataset(const SynthCorpus& corpus, const SynthConfig& config);

}  // namespace tgsum
