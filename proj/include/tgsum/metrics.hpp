#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tgsum/text.hpp"

namespace tgsum {

struct Prf {
  double precision = 0;
  double recall = 0;
  double f = 0;
};

// Harmonic mean of precision and recall computed from an overlap count;
// zero whenever either side is empty.
Prf f_measure(double overlap, double candidate_total, double reference_total);

// Clipped n-gram overlap. `stem` applies the Porter stemmer to both sides.
Prf rouge_n(const Tokens& candidate, const Tokens& reference, int n, bool stem = false);
// Longest-common-subsequence overlap.
Prf rouge_l(const Tokens& candidate, const Tokens& reference, bool stem = false);
std::size_t lcs_length(const Tokens& a, const Tokens& b);

// Unigram f-measure between generated and reference content words after
// removing every token that occurs in the source.
double abstract_metric(const Tokens& generated, const Tokens& reference, const Tokens& source);
// Unigram f-measure between generated and reference content words restricted
// to tokens that occur in the source.
double copy_metric(const Tokens& generated, const Tokens& reference, const Tokens& source);

struct InstanceScores {
  Prf r1, r2, rl;
  double abstract = 0;
  double copy = 0;
  bool empty_output = false;
};

struct MetricReport {
  std::vector<InstanceScores> instances;
  InstanceScores mean;  // arithmetic means over instances
  int empty_outputs = 0;

  nlohmann::json to_json(bool per_instance = true) const;
};

InstanceScores score_instance(const Tokens& generated, const Tokens& reference, const Tokens& source,
                              bool stem = true);
MetricReport evaluate_corpus(const std::vector<Tokens>& generated, const std::vector<Tokens>& references,
                             const std::vector<Tokens>& sources, bool stem = true);

}  // namespace tgsum
