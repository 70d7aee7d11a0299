#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "tgsum/corpus.hpp"
#include "tgsum/text.hpp"

namespace tgsum {

struct LdaOptions {
  double alpha = 0.001;  // symmetric document-topic prior
  double eta = 0.01;     // symmetric topic-word prior
  int iterations = 200;
  std::uint64_t seed = 100;
};

// Topic templates learned from summary sentences. Rows of `phi` are
// distributions over `vocab`.
struct TopicModel {
  int num_topics = 0;
  double alpha = 0.001;
  double eta = 0.01;
  std::vector<std::string> vocab;
  std::vector<std::vector<double>> phi;  // num_topics x vocab.size()
  int fallback_topic = 0;                // most frequent topic in the training assignments
  std::uint64_t seed = 100;

  int eot_label() const { return num_topics; }
  int word_id(const std::string& w) const;
  std::vector<std::string> top_words(int topic, int n) const;

  void save(const std::filesystem::path& path) const;
  static TopicModel load(const std::filesystem::path& path);

 private:
  mutable std::unordered_map<std::string, int> index_;
};

// Content-word preprocessing applied to sentences before topic modelling:
// stopwords and punctuation dropped, Porter stems. Input is tokenizer output (lowercase).
Tokens topic_terms(const Tokens& sentence);

// Collapsed Gibbs sampling LDA over short documents (sentences).
TopicModel train_lda(const std::vector<Tokens>& sentence_docs, int num_topics, const LdaOptions& opts = {});

struct CoherenceReport {
  std::vector<double> per_topic;
  double mean = 0;
};

// NPMI over the top-`top_n` words of each topic, using sliding-window
// co-occurrence (window of `window` tokens) over `docs`.
CoherenceReport topic_coherence(const TopicModel& model, const std::vector<Tokens>& docs, int top_n = 10,
                                int window = 10);

// NPMI of one word list against `docs`; exposed for direct checks.
double npmi_coherence(const std::vector<std::string>& words, const std::vector<Tokens>& docs, int window = 10);

struct TopicCandidate {
  int num_topics = 0;
  TopicModel model;
  CoherenceReport coherence;
};

// One model per K, sorted by descending mean coherence (ties: smaller K first).
std::vector<TopicCandidate> grid_search_topics(const std::vector<Tokens>& sentence_docs,
                                               const std::vector<int>& k_values, const LdaOptions& opts = {});
std::vector<int> default_topic_grid();

struct SentenceTopic {
  int topic = 0;
  bool fallback = false;  // no in-vocabulary content word; `topic` is the model's fallback
  std::vector<double> theta;
};

// Fold-in Gibbs inference of the sentence's topic mixture over already
// preprocessed terms; returns the argmax topic (lowest id on ties).
SentenceTopic infer_sentence_topic(const TopicModel& model, const Tokens& terms, int iterations = 50);

// Raw sentence tokens in, topic id out.
int annotate_sentence(const TopicModel& model, const Tokens& sentence);

// Fills topic_labels of every example: one topic per sentence plus EOT.
void label_examples(const TopicModel& model, const Vocab& vocab, std::vector<Example>& examples);
void label_corpus(const TopicModel& model, const Vocab& vocab, CorpusSplit& split);

// Human-readable listing of the top words per topic.
std::string topic_summary(const TopicModel& model, int top_n = 10);

}  // namespace tgsum
