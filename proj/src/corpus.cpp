#include "tgsum/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tgsum/error.hpp"
#include "tgsum/io.hpp"

namespace tgsum {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Vocab

const std::vector<std::string>& Vocab::special_tokens() {
  static const std::vector<std::string> specials = {"<pad>", "<unk>", "<s>",  "</s>",
                                                    "<eod>", "<eop>", "<eot>"};
  return specials;
}

Vocab::Vocab() : Vocab(std::vector<std::string>{}) {}

Vocab::Vocab(const std::vector<std::string>& regular_tokens) {
  tokens_ = special_tokens();
  for (const auto& t : regular_tokens) tokens_.push_back(t);
  for (int i = 0; i < static_cast<int>(tokens_.size()); ++i) {
    auto [it, inserted] = index_.emplace(tokens_[i], i);
    if (!inserted) throw DataError("duplicate vocabulary token: " + tokens_[i]);
  }
}

int Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) throw DataError("token id out of range: " + std::to_string(id));
  return tokens_[id];
}

bool Vocab::contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }

Ids Vocab::encode(const Tokens& tokens) const {
  Ids out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

Tokens Vocab::decode(const Ids& ids) const {
  Tokens out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

std::vector<std::string> Vocab::regular_tokens() const {
  return {tokens_.begin() + kNumSpecials, tokens_.end()};
}

std::uint64_t Vocab::hash() const {
  std::uint64_t h = fnv1a("");
  for (const auto& t : tokens_) {
    h = fnv1a(t, h);
    h = fnv1a("\n", h);
  }
  return h;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::string out;
  for (int i = kNumSpecials; i < size(); ++i) {
    out += tokens_[i];
    out += '\n';
  }
  write_file_atomic(path, out);
}

Vocab Vocab::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("vocab file not found: " + path.string());
  auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (lines[i].empty())
      throw DataError(path.string() + ":" + std::to_string(i + 1) + ": empty vocabulary entry");
  return Vocab(lines);
}

// ---------------------------------------------------------------------------
// Ranking and filtering

std::vector<double> paragraph_scores(const Tokens& title, const std::vector<Tokens>& paragraphs,
                                     double slope) {
  std::vector<double> scores(paragraphs.size(), 0.0);
  if (title.empty() || paragraphs.empty()) return scores;

  const double n = static_cast<double>(paragraphs.size());
  double total_len = 0;
  std::vector<std::map<std::string, int>> tf(paragraphs.size());
  std::map<std::string, int> df;
  for (std::size_t p = 0; p < paragraphs.size(); ++p) {
    total_len += static_cast<double>(paragraphs[p].size());
    for (const auto& w : paragraphs[p]) ++tf[p][w];
    for (const auto& [w, c] : tf[p]) ++df[w];
  }
  const double avglen = total_len / n;
  // distinct query terms
  std::set<std::string> query(title.begin(), title.end());

  for (std::size_t p = 0; p < paragraphs.size(); ++p) {
    double norm = (1.0 - slope) + (avglen > 0 ? slope * paragraphs[p].size() / avglen : slope);
    double s = 0;
    for (const auto& w : query) {
      auto it = tf[p].find(w);
      if (it == tf[p].end()) continue;
      double damped = 1.0 + std::log(1.0 + std::log(static_cast<double>(it->second)));
      s += damped / norm * std::log((n + 1.0) / df[w]);
    }
    scores[p] = s;
  }
  return scores;
}

std::vector<Tokens> rank_paragraphs(const Tokens& title, const std::vector<Tokens>& paragraphs,
                                    double slope) {
  auto scores = paragraph_scores(title, paragraphs, slope);
  std::vector<std::size_t> order(paragraphs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<Tokens> ranked;
  ranked.reserve(order.size());
  for (auto i : order) ranked.push_back(paragraphs[i]);
  return ranked;
}

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::kNone: return "accepted";
    case RejectReason::kTooFewDocs: return "too_few_docs";
    case RejectReason::kShortLead: return "short_lead";
    case RejectReason::kLongSentence: return "long_sentence";
    case RejectReason::kTooManySentences: return "too_many_sentences";
    case RejectReason::kEmpty: return "empty";
  }
  return "unknown";
}

FilterResult filter_instance(const RawInstance& inst, const CorpusLimits& limits) {
  if (inst.title.empty() || inst.paragraphs.empty()) return {false, RejectReason::kEmpty};
  int docs = inst.doc_count > 0 ? inst.doc_count : static_cast<int>(inst.paragraphs.size());
  if (docs < limits.min_docs) return {false, RejectReason::kTooFewDocs};
  Tokens lead = tokenize(inst.lead);
  if (static_cast<int>(lead.size()) <= limits.min_lead_tokens) return {false, RejectReason::kShortLead};
  for (const auto& s : split_sentences(lead))
    if (static_cast<int>(s.size()) > limits.max_lead_sentence_len)
      return {false, RejectReason::kLongSentence};
  return {true, RejectReason::kNone};
}

// ---------------------------------------------------------------------------
// Source and summary construction

Tokens truncate_source(Tokens source, int max_tokens) {
  if (static_cast<int>(source.size()) > max_tokens) source.resize(static_cast<std::size_t>(max_tokens));
  return source;
}

Tokens build_source(const Tokens& title, const std::vector<Tokens>& ranked, int max_tokens) {
  const auto& sp = Vocab::special_tokens();
  Tokens out = title;
  out.push_back(sp[kEot]);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (static_cast<int>(out.size()) >= max_tokens) break;
    if (i) out.push_back(sp[kEop]);
    out.insert(out.end(), ranked[i].begin(), ranked[i].end());
  }
  return truncate_source(std::move(out), max_tokens);
}

std::vector<Tokens> segment_summary(std::string_view lead, int max_len) {
  std::vector<Tokens> out;
  for (auto& sentence : split_sentences(tokenize(lead))) {
    for (std::size_t start = 0; start < sentence.size(); start += static_cast<std::size_t>(max_len)) {
      std::size_t end = std::min(sentence.size(), start + static_cast<std::size_t>(max_len));
      out.emplace_back(sentence.begin() + static_cast<std::ptrdiff_t>(start),
                       sentence.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return out;
}

std::optional<TextExample> make_example(const RawInstance& inst, const CorpusLimits& limits,
                                        RejectReason* reason) {
  auto verdict = filter_instance(inst, limits);
  if (!verdict.accepted) {
    if (reason) *reason = verdict.reason;
    return std::nullopt;
  }
  auto summary = segment_summary(inst.lead, limits.max_sentence_len);
  if (summary.empty() || static_cast<int>(summary.size()) > limits.max_sentences) {
    if (reason) *reason = RejectReason::kTooManySentences;
    return std::nullopt;
  }
  TextExample ex;
  ex.title = inst.title;
  ex.source = build_source(inst.title, rank_paragraphs(inst.title, inst.paragraphs, limits.pivot_slope),
                           limits.max_source_tokens);
  ex.summary = std::move(summary);
  if (reason) *reason = RejectReason::kNone;
  return ex;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocab build_vocab(const std::vector<TextExample>& examples, int size) {
  std::unordered_map<std::string, long> counts;
  for (const auto& ex : examples) {
    for (const auto& t : ex.source) ++counts[t];
    for (const auto& s : ex.summary)
      for (const auto& t : s) ++counts[t];
  }
  for (const auto& sp : Vocab::special_tokens()) counts.erase(sp);
  std::vector<std::pair<std::string, long>> entries(counts.begin(), counts.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(entries.size()) > size) entries.resize(static_cast<std::size_t>(std::max(size, 0)));
  std::vector<std::string> tokens;
  tokens.reserve(entries.size());
  for (auto& e : entries) tokens.push_back(std::move(e.first));
  return Vocab(tokens);
}

Example encode_example(const TextExample& ex, const Vocab& vocab) {
  Example out;
  out.title = vocab.encode(ex.title);
  out.source = vocab.encode(ex.source);
  for (const auto& s : ex.summary) out.sentences.push_back(vocab.encode(s));
  return out;
}

void validate_example(const Example& ex, const CorpusLimits& limits) {
  if (ex.source.empty()) throw DataError("example has empty source");
  if (static_cast<int>(ex.source.size()) > limits.max_source_tokens)
    throw DataError("source longer than " + std::to_string(limits.max_source_tokens));
  if (ex.sentences.empty() || static_cast<int>(ex.sentences.size()) > limits.max_sentences)
    throw DataError("sentence count out of range: " + std::to_string(ex.sentences.size()));
  std::size_t total = 0;
  for (const auto& s : ex.sentences) {
    if (s.empty() || static_cast<int>(s.size()) > limits.max_sentence_len)
      throw DataError("sentence length out of range: " + std::to_string(s.size()));
    total += s.size();
  }
  if (static_cast<int>(total) <= limits.min_lead_tokens)
    throw DataError("summary too short: " + std::to_string(total));
  if (!ex.topic_labels.empty() && ex.topic_labels.size() != ex.sentences.size() + 1)
    throw DataError("topic label count must equal sentence count + 1");
}

// ---------------------------------------------------------------------------
// Splits

SplitIndices assign_splits(const std::vector<Tokens>& titles) {
  const std::size_t n = titles.size();
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  keyed.reserve(n);
  for (std::size_t i = 0; i < n; ++i) keyed.emplace_back(fnv1a(join(titles[i])), i);
  std::sort(keyed.begin(), keyed.end());

  auto n_valid = static_cast<std::size_t>(std::llround(0.05 * static_cast<double>(n)));
  auto n_test = static_cast<std::size_t>(std::llround(0.05 * static_cast<double>(n)));
  std::size_t n_train = n - n_valid - n_test;

  SplitIndices out;
  for (std::size_t r = 0; r < n; ++r) {
    auto idx = keyed[r].second;
    if (r < n_train) out.train.push_back(idx);
    else if (r < n_train + n_valid) out.valid.push_back(idx);
    else out.test.push_back(idx);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.valid.begin(), out.valid.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::string example_to_json_line(const Example& ex) {
  json j;
  j["title"] = ex.title;
  j["source"] = ex.source;
  j["sentences"] = ex.sentences;
  j["topics"] = ex.topic_labels;
  return j.dump();
}

Example example_from_json_line(std::string_view line) {
  json j = json::parse(line);
  if (!j.is_object()) throw DataError("record is not an object");
  Example ex;
  ex.title = j.at("title").get<Ids>();
  ex.source = j.at("source").get<Ids>();
  ex.sentences = j.at("sentences").get<std::vector<Ids>>();
  if (j.contains("topics")) ex.topic_labels = j.at("topics").get<Ids>();
  return ex;
}

void write_split(const std::filesystem::path& path, const std::vector<Example>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += example_to_json_line(ex);
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<Example> read_split(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  std::vector<Example> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      out.push_back(example_from_json_line(lines[i]));
    } catch (const std::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(i + 1) + ": malformed record: " + e.what());
    }
  }
  return out;
}

RawInstance raw_from_json_line(std::string_view line) {
  json j = json::parse(line);
  RawInstance inst;
  inst.title = tokenize(j.at("title").get<std::string>());
  for (const auto& p : j.at("paragraphs")) inst.paragraphs.push_back(tokenize(p.get<std::string>()));
  inst.lead = j.at("lead").get<std::string>();
  if (j.contains("docs")) inst.doc_count = j.at("docs").get<int>();
  return inst;
}

std::vector<RawInstance> read_raw_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("input directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<RawInstance> out;
  for (const auto& f : files) {
    auto lines = read_lines(f);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      try {
        out.push_back(raw_from_json_line(lines[i]));
      } catch (const std::exception& e) {
        throw DataError(f.string() + ":" + std::to_string(i + 1) + ": malformed record: " + e.what());
      }
    }
  }
  return out;
}

}  // namespace tgsum
