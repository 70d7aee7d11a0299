#include "tgsum/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "tgsum/error.hpp"

namespace tgsum {
namespace {

Tokens maybe_stem(const Tokens& tokens, bool stem) {
  if (!stem) return tokens;
  Tokens out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(porter_stem(t));
  return out;
}

std::map<Tokens, int> ngram_counts(const Tokens& tokens, int n) {
  std::map<Tokens, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i)
    ++counts[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                    tokens.begin() + static_cast<std::ptrdiff_t>(i) + n)];
  return counts;
}

Prf clipped_overlap(const Tokens& candidate, const Tokens& reference) {
  std::map<std::string, int> ref;
  for (const auto& t : reference) ++ref[t];
  double overlap = 0;
  std::map<std::string, int> cand;
  for (const auto& t : candidate) ++cand[t];
  for (const auto& [w, c] : cand) {
    auto it = ref.find(w);
    if (it != ref.end()) overlap += std::min(c, it->second);
  }
  return f_measure(overlap, static_cast<double>(candidate.size()), static_cast<double>(reference.size()));
}

}  // namespace

Prf f_measure(double overlap, double candidate_total, double reference_total) {
  Prf out;
  if (candidate_total <= 0 || reference_total <= 0 || overlap <= 0) return out;
  out.precision = overlap / candidate_total;
  out.recall = overlap / reference_total;
  out.f = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

Prf rouge_n(const Tokens& candidate, const Tokens& reference, int n, bool stem) {
  if (n < 1) throw ConfigError("rouge_n: n must be >= 1");
  auto cand = ngram_counts(maybe_stem(candidate, stem), n);
  auto ref = ngram_counts(maybe_stem(reference, stem), n);
  double cand_total = 0, ref_total = 0, overlap = 0;
  for (const auto& [g, c] : cand) cand_total += c;
  for (const auto& [g, c] : ref) ref_total += c;
  for (const auto& [g, c] : cand) {
    auto it = ref.find(g);
    if (it != ref.end()) overlap += std::min(c, it->second);
  }
  return f_measure(overlap, cand_total, ref_total);
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

Prf rouge_l(const Tokens& candidate, const Tokens& reference, bool stem) {
  auto c = maybe_stem(candidate, stem);
  auto r = maybe_stem(reference, stem);
  return f_measure(static_cast<double>(lcs_length(c, r)), static_cast<double>(c.size()),
                   static_cast<double>(r.size()));
}

double abstract_metric(const Tokens& generated, const Tokens& reference, const Tokens& source) {
  std::set<std::string> src(source.begin(), source.end());
  auto novel = [&](const Tokens& tokens) {
    Tokens out;
    for (const auto& t : content_words(tokens))
      if (!src.count(t)) out.push_back(t);
    return out;
  };
  return clipped_overlap(novel(generated), novel(reference)).f;
}

double copy_metric(const Tokens& generated, const Tokens& reference, const Tokens& source) {
  std::set<std::string> src(source.begin(), source.end());
  auto copied = [&](const Tokens& tokens) {
    Tokens out;
    for (const auto& t : content_words(tokens))
      if (src.count(t)) out.push_back(t);
    return out;
  };
  return clipped_overlap(copied(generated), copied(reference)).f;
}

InstanceScores score_instance(const Tokens& generated, const Tokens& reference, const Tokens& source, bool stem) {
  InstanceScores s;
  s.empty_output = generated.empty();
  s.r1 = rouge_n(generated, reference, 1, stem);
  s.r2 = rouge_n(generated, reference, 2, stem);
  s.rl = rouge_l(generated, reference, stem);
  s.abstract = abstract_metric(generated, reference, source);
  s.copy = copy_metric(generated, reference, source);
  return s;
}

MetricReport evaluate_corpus(const std::vector<Tokens>& generated, const std::vector<Tokens>& references,
                             const std::vector<Tokens>& sources, bool stem) {
  if (generated.size() != references.size() || generated.size() != sources.size())
    throw DataError("evaluate: system, reference and source counts differ (" + std::to_string(generated.size()) +
                    ", " + std::to_string(references.size()) + ", " + std::to_string(sources.size()) + ")");
  MetricReport report;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    report.instances.push_back(score_instance(generated[i], references[i], sources[i], stem));
    if (report.instances.back().empty_output) ++report.empty_outputs;
  }
  const double n = static_cast<double>(report.instances.size());
  if (n == 0) return report;
  auto& m = report.mean;
  for (const auto& s : report.instances) {
    for (auto [dst, src] : {std::pair{&m.r1, &s.r1}, std::pair{&m.r2, &s.r2}, std::pair{&m.rl, &s.rl}}) {
      dst->precision += src->precision / n;
      dst->recall += src->recall / n;
      dst->f += src->f / n;
    }
    m.abstract += s.abstract / n;
    m.copy += s.copy / n;
  }
  return report;
}

namespace {
nlohmann::json prf_json(const Prf& p) { return {{"P", p.precision}, {"R", p.recall}, {"F", p.f}}; }
nlohmann::json scores_json(const InstanceScores& s) {
  return {{"R1", prf_json(s.r1)}, {"R2", prf_json(s.r2)}, {"RL", prf_json(s.rl)}, {"A", s.abstract}, {"C", s.copy}};
}
}  // namespace

nlohmann::json MetricReport::to_json(bool per_instance) const {
  nlohmann::json j;
  j["instances"] = instances.size();
  j["empty_outputs"] = empty_outputs;
  j["mean"] = scores_json(mean);
  if (per_instance) {
    auto& arr = j["per_instance"] = nlohmann::json::array();
    for (const auto& s : instances) {
      auto e = scores_json(s);
      e["empty"] = s.empty_output;
      arr.push_back(std::move(e));
    }
  }
  return j;
}

}  // namespace tgsum
