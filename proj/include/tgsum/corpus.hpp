#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tgsum/text.hpp"

namespace tgsum {

using Ids = std::vector<int>;

// Reserved vocabulary entries. Ids are fixed and precede every regular token.
enum SpecialId : int { kPad = 0, kUnk = 1, kSos = 2, kEos = 3, kEod = 4, kEop = 5, kEot = 6 };
inline constexpr int kNumSpecials = 7;

class Vocab {
 public:
  Vocab();
  explicit Vocab(const std::vector<std::string>& regular_tokens);

  int id(std::string_view token) const;  // kUnk when absent
  const std::string& token(int id) const;
  bool contains(std::string_view token) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  Ids encode(const Tokens& tokens) const;
  Tokens decode(const Ids& ids) const;

  // Regular tokens only, in id order.
  std::vector<std::string> regular_tokens() const;
  std::uint64_t hash() const;

  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  static const std::vector<std::string>& special_tokens();

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct RawInstance {
  Tokens title;
  std::vector<Tokens> paragraphs;
  std::string lead;
  // Number of distinct source documents behind the paragraphs; defaults to
  // the paragraph count when the input does not say.
  int doc_count = 0;
};

// Example before vocabulary encoding.
struct TextExample {
  Tokens title;
  Tokens source;
  std::vector<Tokens> summary;
};

struct Example {
  Ids title;
  Ids source;
  std::vector<Ids> sentences;
  Ids topic_labels;  // empty until annotated; otherwise sentences.size() + 1 entries

  bool operator==(const Example&) const = default;
};

struct CorpusSplit {
  std::vector<Example> train;
  std::vector<Example> valid;
  std::vector<Example> test;
};

struct CorpusLimits {
  int max_source_tokens = 800;
  int min_lead_tokens = 23;  // lead must be strictly longer
  int min_docs = 6;
  int max_sentences = 15;
  int max_sentence_len = 40;
  int max_lead_sentence_len = 200;
  double pivot_slope = 0.25;
  int vocab_size = 50000;
};

enum class RejectReason { kNone, kTooFewDocs, kShortLead, kLongSentence, kTooManySentences, kEmpty };
std::string_view to_string(RejectReason reason);

struct FilterResult {
  bool accepted = false;
  RejectReason reason = RejectReason::kNone;
};

// Pivoted-normalized TF-IDF score of every paragraph against the title, with
// document statistics taken from the instance's own paragraph set.
std::vector<double> paragraph_scores(const Tokens& title, const std::vector<Tokens>& paragraphs,
                                     double slope = 0.25);

// Paragraphs by descending score; ties keep their original order.
std::vector<Tokens> rank_paragraphs(const Tokens& title, const std::vector<Tokens>& paragraphs,
                                    double slope = 0.25);

FilterResult filter_instance(const RawInstance& inst, const CorpusLimits& limits = {});

// title + EOT + paragraphs joined by EOP, cut to the first `max_tokens` tokens.
Tokens build_source(const Tokens& title, const std::vector<Tokens>& ranked, int max_tokens = 800);
Tokens truncate_source(Tokens source, int max_tokens);

// Sentence split of the lead; sentences longer than `max_len` are hard-split
// into chunks of `max_len` tokens.
std::vector<Tokens> segment_summary(std::string_view lead, int max_len = 40);

// Full pipeline for one raw instance. Returns nullopt (with reason) on rejection.
std::optional<TextExample> make_example(const RawInstance& inst, const CorpusLimits& limits,
                                        RejectReason* reason = nullptr);

Vocab build_vocab(const std::vector<TextExample>& examples, int size);
Example encode_example(const TextExample& ex, const Vocab& vocab);

// Checks every Example invariant; throws DataError naming the violation.
void validate_example(const Example& ex, const CorpusLimits& limits = {});

// Indices of a deterministic 90/5/5 split ordered by a stable hash of the title.
struct SplitIndices {
  std::vector<std::size_t> train, valid, test;
};
SplitIndices assign_splits(const std::vector<Tokens>& titles);

std::string example_to_json_line(const Example& ex);
Example example_from_json_line(std::string_view line);
void write_split(const std::filesystem::path& path, const std::vector<Example>& examples);
std::vector<Example> read_split(const std::filesystem::path& path);

// Raw input: line-delimited JSON records {title, paragraphs[], lead[, docs]}.
RawInstance raw_from_json_line(std::string_view line);
std::vector<RawInstance> read_raw_dir(const std::filesystem::path& dir);

}  // namespace tgsum
