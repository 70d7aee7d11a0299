#include "tgsum/synth.hpp"

#include <algorithm>
#include <set>

#include "tgsum/error.hpp"
#include "tgsum/io.hpp"
#include "tgsum/text.hpp"

namespace tgsum {

void SynthConfig::validate() const {
  if (instances < 1) throw ConfigError("synth: instances must be >= 1");
  if (min_sentences < 3) throw ConfigError("synth: min_sentences must be >= 3 so the lead is long enough");
  if (max_sentences < min_sentences) throw ConfigError("synth: max_sentences must be >= min_sentences");
  if (max_sentences > topics) throw ConfigError("synth: max_sentences must not exceed topics");
  if (categories < max_sentences - min_sentences + 1)
    throw ConfigError("synth: need at least one category per sentence count");
  if (max_sentences > 15) throw ConfigError("synth: at most 15 sentences");
  if (max_optional < 0 || max_optional > 4) throw ConfigError("synth: max_optional must be in [0, 4]");
  if (max_tail_slots < 1) throw ConfigError("synth: max_tail_slots must be >= 1");
  if (slot_pool < max_sentences * (2 + max_tail_slots))
    throw ConfigError("synth: slot_pool too small for distinct slot values within an instance");
  if (entities < 1 || noise_words < 1) throw ConfigError("synth: pools must be non-empty");
  if (noise_paragraphs < 5 || paragraph_noise < 1) throw ConfigError("synth: need >= 5 non-empty noise paragraphs");
}

nlohmann::json SynthConfig::to_json() const {
  return {{"instances", instances},         {"topics", topics},
          {"min_sentences", min_sentences}, {"max_sentences", max_sentences},
          {"categories", categories},
          {"max_optional", max_optional},   {"max_tail_slots", max_tail_slots},
          {"slot_pool", slot_pool},         {"entities", entities},
          {"noise_words", noise_words},     {"noise_paragraphs", noise_paragraphs},
          {"paragraph_noise", paragraph_noise}, {"seed", seed}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c;
  c.instances = j.value("instances", c.instances);
  c.topics = j.value("topics", c.topics);
  c.min_sentences = j.value("min_sentences", c.min_sentences);
  c.max_sentences = j.value("max_sentences", c.max_sentences);
  c.categories = j.value("categories", c.categories);
  c.max_optional = j.value("max_optional", c.max_optional);
  c.max_tail_slots = j.value("max_tail_slots", c.max_tail_slots);
  c.slot_pool = j.value("slot_pool", c.slot_pool);
  c.entities = j.value("entities", c.entities);
  c.noise_words = j.value("noise_words", c.noise_words);
  c.noise_paragraphs = j.value("noise_paragraphs", c.noise_paragraphs);
  c.paragraph_noise = j.value("paragraph_noise", c.paragraph_noise);
  c.seed = j.value("seed", c.seed);
  return c;
}

namespace {

// Pseudo-words with pairwise distinct stems.
class WordFactory {
 public:
  explicit WordFactory(std::uint64_t seed) : rng_(seed) {}

  std::string next() {
    static constexpr std::string_view kConsonants = "bdfgklmnprtvz";
    static constexpr std::string_view kVowels = "aeiou";
    for (;;) {
      std::string w;
      int syllables = 2 + static_cast<int>(rng_() % 2);
      for (int i = 0; i < syllables; ++i) {
        w += kConsonants[rng_() % kConsonants.size()];
        w += kVowels[rng_() % kVowels.size()];
      }
      if (is_stopword(w) || is_abbreviation(w)) continue;
      if (!stems_.insert(porter_stem(w)).second) continue;
      return w;
    }
  }

  std::vector<std::string> take(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(next());
    return out;
  }

  Rng& rng() { return rng_; }

 private:
  Rng rng_;
  std::set<std::string> stems_;
};

// head SLOT optional[0, m) middle SLOT (and SLOT)+ .
struct Template {
  std::vector<std::string> head;
  std::vector<std::string> optional;
  std::vector<std::string> middle;
};

std::size_t pick(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

}  // namespace

SynthCorpus synthesize(const SynthConfig& config) {
  config.validate();
  WordFactory words(config.seed);
  SynthCorpus corpus;

  std::vector<Template> templates;
  for (int k = 0; k < config.topics; ++k) {
    Template t;
    auto w = words.take(10);
    t.head = {w[0], w[1], w[2], "the"};
    t.middle = {w[3], w[4], w[5], "of"};
    t.optional = {w[6], w[7], w[8], w[9]};
    corpus.topic_words.push_back(w);
    templates.push_back(std::move(t));
  }
  auto slot_values = words.take(config.slot_pool);
  auto entities = words.take(config.entities);
  auto noise = words.take(config.noise_words);
  std::vector<std::string> categories = words.take(config.categories);

  Rng& rng = words.rng();
  // Each category fixes the sentence count and the topic order.
  const std::size_t count_range = static_cast<std::size_t>(config.max_sentences - config.min_sentences + 1);
  std::vector<std::vector<int>> plans;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    std::vector<int> order(static_cast<std::size_t>(config.topics));
    for (int k = 0; k < config.topics; ++k) order[static_cast<std::size_t>(k)] = k;
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[pick(rng, i + 1)]);
    order.resize(static_cast<std::size_t>(config.min_sentences) + c % count_range);
    plans.push_back(std::move(order));
  }

  for (int i = 0; i < config.instances; ++i) {
    SynthInstance inst;
    const std::size_t cat = pick(rng, categories.size());
    const std::string& entity = entities[pick(rng, entities.size())];
    inst.title = entity + " " + categories[cat];

    std::vector<std::string> sentences;
    std::vector<std::size_t> used;
    auto draw_slot = [&]() {
      for (;;) {
        std::size_t v = pick(rng, slot_values.size());
        if (std::find(used.begin(), used.end(), v) != used.end()) continue;
        used.push_back(v);
        return slot_values[v];
      }
    };
    for (int topic : plans[cat]) {
      const Template& tpl = templates[static_cast<std::size_t>(topic)];
      const std::size_t m = pick(rng, static_cast<std::size_t>(config.max_optional) + 1);
      const std::size_t tail = 1 + pick(rng, static_cast<std::size_t>(config.max_tail_slots));

      std::vector<std::string> toks;
      if (sentences.empty()) toks.push_back(entity);
      toks.insert(toks.end(), tpl.head.begin(), tpl.head.end());
      toks.push_back(draw_slot());
      toks.insert(toks.end(), tpl.optional.begin(), tpl.optional.begin() + static_cast<std::ptrdiff_t>(m));
      toks.insert(toks.end(), tpl.middle.begin(), tpl.middle.end());
      toks.push_back(draw_slot());
      for (std::size_t r = 0; r < tail; ++r) {
        toks.push_back("and");
        toks.push_back(draw_slot());
      }
      sentences.push_back(join(toks) + ".");
      inst.topics.push_back(topic);
    }

    // Every slot value of the instance sits in one shuffled paragraph.
    std::vector<std::string> slot_para;
    for (auto v : used) slot_para.push_back(slot_values[v]);
    for (std::size_t j = slot_para.size() - 1; j > 0; --j) std::swap(slot_para[j], slot_para[pick(rng, j + 1)]);
    inst.paragraphs.push_back(join(slot_para));
    for (int p = 0; p < config.noise_paragraphs; ++p) {
      std::vector<std::string> para;
      for (int j = 0; j < config.paragraph_noise; ++j) para.push_back(noise[pick(rng, noise.size())]);
      inst.paragraphs.push_back(join(para));
    }

    inst.raw.title = tokenize(inst.title);
    for (const auto& p : inst.paragraphs) inst.raw.paragraphs.push_back(tokenize(p));
    inst.raw.lead = join(sentences);
    inst.raw.doc_count = static_cast<int>(inst.paragraphs.size());
    corpus.instances.push_back(std::move(inst));
  }
  return corpus;
}

std::string raw_to_json_line(const SynthInstance& inst) {
  nlohmann::json j;
  j["title"] = inst.title;
  j["paragraphs"] = inst.paragraphs;
  j["lead"] = inst.raw.lead;
  j["docs"] = inst.raw.doc_count;
  return j.dump();
}

SynthDataset build_synth_dataset(const SynthCorpus& corpus, const SynthConfig& config) {
  std::vector<TextExample> texts;
  for (const auto& inst : corpus.instances) {
    RejectReason reason;
    auto ex = make_example(inst.raw, CorpusLimits{}, &reason);
    if (!ex) throw DataError("synthetic instance rejected: " + std::string(to_string(reason)));
    if (ex->summary.size() != inst.topics.size()) throw DataError("synthetic summary segmentation mismatch");
    texts.push_back(std::move(*ex));
  }
  SynthDataset out;
  out.vocab = build_vocab(texts, CorpusLimits{}.vocab_size);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Example ex = encode_example(texts[i], out.vocab);
    ex.topic_labels = corpus.instances[i].topics;
    ex.topic_labels.push_back(config.topics);
    out.examples.push_back(std::move(ex));
  }
  return out;
}

}  // namespace tgsum
