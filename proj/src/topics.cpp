#include "tgsum/topics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "tgsum/error.hpp"
#include "tgsum/io.hpp"

namespace tgsum {
namespace {

constexpr double kCoocEpsilon = 1e-12;
constexpr char kModelMagic[] = "tgsum-topic-model";
constexpr int kModelVersion = 1;

int sample_discrete(const std::vector<double>& weights, double total, Rng& rng) {
  double u = uniform01(rng) * total;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    u -= weights[k];
    if (u < 0) return static_cast<int>(k);
  }
  return static_cast<int>(weights.size()) - 1;
}

int argmax_lowest(const std::vector<double>& v) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(v.size()); ++k)
    if (v[k] > v[best]) best = k;
  return best;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

int TopicModel::word_id(const std::string& w) const {
  if (index_.size() != vocab.size()) {
    index_.clear();
    for (int i = 0; i < static_cast<int>(vocab.size()); ++i) index_.emplace(vocab[i], i);
  }
  auto it = index_.find(w);
  return it == index_.end() ? -1 : it->second;
}

std::vector<std::string> TopicModel::top_words(int topic, int n) const {
  const auto& row = phi.at(static_cast<std::size_t>(topic));
  std::vector<int> order(row.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return row[a] > row[b]; });
  std::vector<std::string> out;
  for (int i = 0; i < std::min<int>(n, static_cast<int>(order.size())); ++i) out.push_back(vocab[order[i]]);
  return out;
}

void TopicModel::save(const std::filesystem::path& path) const {
  std::string out;
  out += std::string(kModelMagic) + " " + std::to_string(kModelVersion) + "\n";
  out += std::to_string(num_topics) + " " + format_double(alpha) + " " + format_double(eta) + " " +
         std::to_string(vocab.size()) + " " + std::to_string(fallback_topic) + " " + std::to_string(seed) + "\n";
  for (const auto& w : vocab) out += w + "\n";
  for (const auto& row : phi) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ' ';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

TopicModel TopicModel::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("topic model not found: " + path.string());
  std::istringstream in(read_file(path));
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != kModelMagic || version != kModelVersion)
    throw DataError(path.string() + ": not a topic model file (version " + std::to_string(kModelVersion) + ")");
  TopicModel m;
  std::size_t v = 0;
  in >> m.num_topics >> m.alpha >> m.eta >> v >> m.fallback_topic >> m.seed;
  if (!in || m.num_topics < 1) throw DataError(path.string() + ": bad topic model header");
  m.vocab.resize(v);
  for (auto& w : m.vocab) in >> w;
  m.phi.assign(static_cast<std::size_t>(m.num_topics), std::vector<double>(v));
  for (auto& row : m.phi)
    for (auto& x : row) in >> x;
  if (!in) throw DataError(path.string() + ": truncated topic model");
  return m;
}

Tokens topic_terms(const Tokens& sentence) {
  Tokens out;
  for (const auto& w : content_words(sentence)) out.push_back(porter_stem(w));
  return out;
}

TopicModel train_lda(const std::vector<Tokens>& sentence_docs, int num_topics, const LdaOptions& opts) {
  if (num_topics < 1) throw ConfigError("number of topics must be >= 1");
  if (opts.alpha <= 0 || opts.eta <= 0) throw ConfigError("LDA priors must be positive");

  std::set<std::string> words;
  for (const auto& d : sentence_docs) words.insert(d.begin(), d.end());
  TopicModel model;
  model.num_topics = num_topics;
  model.alpha = opts.alpha;
  model.eta = opts.eta;
  model.seed = opts.seed;
  model.vocab.assign(words.begin(), words.end());
  const int V = static_cast<int>(model.vocab.size());
  const int K = num_topics;
  if (V < K)
    throw DataError("topic vocabulary (" + std::to_string(V) + ") smaller than number of topics (" +
                    std::to_string(K) + ")");

  std::vector<std::vector<int>> docs;
  docs.reserve(sentence_docs.size());
  for (const auto& d : sentence_docs) {
    std::vector<int> ids;
    for (const auto& w : d) ids.push_back(model.word_id(w));
    docs.push_back(std::move(ids));
  }

  Rng rng(opts.seed);
  std::vector<std::vector<int>> z(docs.size());
  std::vector<std::vector<int>> n_dk(docs.size(), std::vector<int>(static_cast<std::size_t>(K), 0));
  std::vector<std::vector<int>> n_kw(static_cast<std::size_t>(K), std::vector<int>(static_cast<std::size_t>(V), 0));
  std::vector<int> n_k(static_cast<std::size_t>(K), 0);

  for (std::size_t d = 0; d < docs.size(); ++d) {
    z[d].resize(docs[d].size());
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      int k = static_cast<int>(uniform01(rng) * K);
      z[d][i] = k;
      ++n_dk[d][k];
      ++n_kw[k][docs[d][i]];
      ++n_k[k];
    }
  }

  const double v_eta = V * opts.eta;
  std::vector<double> p(static_cast<std::size_t>(K));
  // The document prior is annealed from 1 down to alpha over the first half of
  // the sweeps; the second half samples with alpha itself.
  const int burn_in = opts.iterations / 2;
  for (int it = 0; it < opts.iterations && K > 1; ++it) {
    const double alpha =
        it < burn_in ? std::max(opts.alpha, std::pow(opts.alpha, static_cast<double>(it) / burn_in)) : opts.alpha;
    for (std::size_t d = 0; d < docs.size(); ++d) {
      for (std::size_t i = 0; i < docs[d].size(); ++i) {
        int w = docs[d][i];
        int k = z[d][i];
        --n_dk[d][k];
        --n_kw[k][w];
        --n_k[k];
        double total = 0;
        for (int t = 0; t < K; ++t) {
          p[t] = (n_dk[d][t] + alpha) * (n_kw[t][w] + opts.eta) / (n_k[t] + v_eta);
          total += p[t];
        }
        k = sample_discrete(p, total, rng);
        z[d][i] = k;
        ++n_dk[d][k];
        ++n_kw[k][w];
        ++n_k[k];
      }
    }
  }

  model.phi.assign(static_cast<std::size_t>(K), std::vector<double>(static_cast<std::size_t>(V)));
  for (int k = 0; k < K; ++k) {
    double sum = 0;
    for (int w = 0; w < V; ++w) {
      model.phi[k][w] = (n_kw[k][w] + opts.eta) / (n_k[k] + v_eta);
      sum += model.phi[k][w];
    }
    for (auto& x : model.phi[k]) x /= sum;
  }

  std::vector<int> doc_topic_counts(static_cast<std::size_t>(K), 0);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (docs[d].empty()) continue;
    std::vector<double> theta(n_dk[d].begin(), n_dk[d].end());
    ++doc_topic_counts[argmax_lowest(theta)];
  }
  model.fallback_topic = static_cast<int>(
      std::max_element(doc_topic_counts.begin(), doc_topic_counts.end()) - doc_topic_counts.begin());
  return model;
}

double npmi_coherence(const std::vector<std::string>& words, const std::vector<Tokens>& docs, int window) {
  if (words.size() < 2) return 0.0;
  std::map<std::string, int> word_index;
  for (int i = 0; i < static_cast<int>(words.size()); ++i) word_index.emplace(words[i], i);
  const std::size_t n = words.size();
  std::vector<double> single(n, 0.0);
  std::vector<std::vector<double>> pair(n, std::vector<double>(n, 0.0));
  double num_windows = 0;

  auto count_window = [&](const Tokens& doc, std::size_t begin, std::size_t end) {
    std::vector<char> present(n, 0);
    for (std::size_t i = begin; i < end; ++i) {
      auto it = word_index.find(doc[i]);
      if (it != word_index.end()) present[static_cast<std::size_t>(it->second)] = 1;
    }
    for (std::size_t a = 0; a < n; ++a) {
      if (!present[a]) continue;
      single[a] += 1;
      for (std::size_t b = a + 1; b < n; ++b)
        if (present[b]) pair[a][b] += 1;
    }
    num_windows += 1;
  };

  for (const auto& doc : docs) {
    if (doc.empty()) continue;
    auto w = static_cast<std::size_t>(window);
    if (doc.size() <= w) {
      count_window(doc, 0, doc.size());
    } else {
      for (std::size_t s = 0; s + w <= doc.size(); ++s) count_window(doc, s, s + w);
    }
  }
  if (num_windows == 0) return 0.0;

  double total = 0;
  int pairs = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      double pa = std::max(single[a], kCoocEpsilon) / num_windows;
      double pb = std::max(single[b], kCoocEpsilon) / num_windows;
      double pab = (pair[a][b] > 0 ? pair[a][b] : kCoocEpsilon) / num_windows;
      double npmi;
      if (pab >= 1.0) {
        npmi = 1.0;
      } else {
        npmi = std::log(pab / (pa * pb)) / -std::log(pab);
      }
      total += std::clamp(npmi, -1.0, 1.0);
      ++pairs;
    }
  }
  return total / pairs;
}

CoherenceReport topic_coherence(const TopicModel& model, const std::vector<Tokens>& docs, int top_n, int window) {
  CoherenceReport report;
  for (int k = 0; k < model.num_topics; ++k)
    report.per_topic.push_back(npmi_coherence(model.top_words(k, top_n), docs, window));
  if (!report.per_topic.empty())
    report.mean = std::accumulate(report.per_topic.begin(), report.per_topic.end(), 0.0) /
                  static_cast<double>(report.per_topic.size());
  return report;
}

std::vector<int> default_topic_grid() { return {10, 20, 30, 40, 50, 60, 70, 80, 90}; }

std::vector<TopicCandidate> grid_search_topics(const std::vector<Tokens>& sentence_docs,
                                               const std::vector<int>& k_values, const LdaOptions& opts) {
  std::vector<TopicCandidate> out;
  for (int k : k_values) {
    TopicCandidate c;
    c.num_topics = k;
    c.model = train_lda(sentence_docs, k, opts);
    c.coherence = topic_coherence(c.model, sentence_docs);
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(), [](const TopicCandidate& a, const TopicCandidate& b) {
    if (a.coherence.mean != b.coherence.mean) return a.coherence.mean > b.coherence.mean;
    return a.num_topics < b.num_topics;
  });
  return out;
}

SentenceTopic infer_sentence_topic(const TopicModel& model, const Tokens& terms, int iterations) {
  const int K = model.num_topics;
  std::vector<int> words;
  for (const auto& t : terms) {
    int id = model.word_id(t);
    if (id >= 0) words.push_back(id);
  }
  SentenceTopic out;
  if (words.empty()) {
    out.topic = model.fallback_topic;
    out.fallback = true;
    return out;
  }
  // Bag of words: sorting makes the chain independent of word order.
  std::sort(words.begin(), words.end());
  std::uint64_t h = model.seed;
  for (int w : words) h = mix_seed(h, static_cast<std::uint64_t>(w));
  Rng rng(h);

  std::vector<int> z(words.size());
  std::vector<int> n_k(static_cast<std::size_t>(K), 0);
  for (std::size_t i = 0; i < words.size(); ++i) {
    int best = 0;
    for (int k = 1; k < K; ++k)
      if (model.phi[k][words[i]] > model.phi[best][words[i]]) best = k;
    z[i] = best;
    ++n_k[best];
  }
  std::vector<double> p(static_cast<std::size_t>(K));
  for (int it = 0; it < iterations && K > 1; ++it) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      --n_k[z[i]];
      double total = 0;
      for (int k = 0; k < K; ++k) {
        p[k] = model.phi[k][words[i]] * (n_k[k] + model.alpha);
        total += p[k];
      }
      z[i] = sample_discrete(p, total, rng);
      ++n_k[z[i]];
    }
  }
  out.theta.resize(static_cast<std::size_t>(K));
  const double denom = static_cast<double>(words.size()) + K * model.alpha;
  for (int k = 0; k < K; ++k) out.theta[k] = (n_k[k] + model.alpha) / denom;
  out.topic = argmax_lowest(out.theta);
  return out;
}

int annotate_sentence(const TopicModel& model, const Tokens& sentence) {
  return infer_sentence_topic(model, topic_terms(sentence)).topic;
}

void label_examples(const TopicModel& model, const Vocab& vocab, std::vector<Example>& examples) {
  for (auto& ex : examples) {
    Ids labels;
    labels.reserve(ex.sentences.size() + 1);
    for (const auto& s : ex.sentences) {
      Tokens words;
      for (int id : s)
        if (id >= kNumSpecials) words.push_back(vocab.token(id));
      labels.push_back(annotate_sentence(model, words));
    }
    labels.push_back(model.eot_label());
    ex.topic_labels = std::move(labels);
  }
}

void label_corpus(const TopicModel& model, const Vocab& vocab, CorpusSplit& split) {
  label_examples(model, vocab, split.train);
  label_examples(model, vocab, split.valid);
  label_examples(model, vocab, split.test);
}

std::string topic_summary(const TopicModel& model, int top_n) {
  std::ostringstream out;
  for (int k = 0; k < model.num_topics; ++k) {
    out << "#" << k << ":";
    for (const auto& w : model.top_words(k, top_n)) out << " " << w;
    out << "\n";
  }
  return out.str();
}

}  // namespace tgsum
