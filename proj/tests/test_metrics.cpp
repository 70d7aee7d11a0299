#include <doctest.h>

#include "tgsum/error.hpp"
#include "tgsum/metrics.hpp"

using namespace tgsum;

TEST_CASE("rouge on a hand example") {
  Tokens cand = {"the", "cat", "sat", "on", "the", "mat"};
  Tokens ref = {"the", "cat", "lay", "on", "the", "mat"};
  CHECK(rouge_n(cand, ref, 1).f == doctest::Approx(5.0 / 6));
  CHECK(rouge_n(cand, ref, 2).f == doctest::Approx(3.0 / 5));
  CHECK(lcs_length(cand, ref) == 5);
  CHECK(rouge_l(cand, ref).f == doctest::Approx(5.0 / 6));
}

TEST_CASE("clipping, asymmetry and empty sides") {
  Prf p = rouge_n({"the", "the", "the"}, {"the"}, 1);
  CHECK(p.precision == doctest::Approx(1.0 / 3));
  CHECK(p.recall == 1.0);
  CHECK(p.f == doctest::Approx(0.5));
  CHECK(rouge_n({}, {"a"}, 1).f == 0.0);
  CHECK(rouge_n({"a"}, {}, 1).f == 0.0);
  CHECK(rouge_n({"a"}, {"a"}, 2).f == 0.0);
  CHECK(rouge_l({}, {}).f == 0.0);
  CHECK(f_measure(0, 0, 0).f == 0.0);
  CHECK(f_measure(2, 4, 2).f == doctest::Approx(2 * 0.5 * 1.0 / 1.5));
}

TEST_CASE("stemming merges inflections") {
  CHECK(rouge_n({"running"}, {"runs"}, 1, false).f == 0.0);
  CHECK(rouge_n({"running"}, {"runs"}, 1, true).f == 1.0);
  CHECK(rouge_l({"cats", "jumped"}, {"cat", "jumping"}, true).f == 1.0);
}

TEST_CASE("abstraction and copy metrics split by source membership") {
  Tokens gen = {"new", "york", "city", "."};
  Tokens ref = {"the", "new", "york", "town"};
  Tokens src = {"york"};
  CHECK(abstract_metric(gen, ref, src) == doctest::Approx(0.5));
  CHECK(copy_metric(gen, ref, src) == doctest::Approx(1.0));
  CHECK(copy_metric(gen, ref, {}) == 0.0);
}

TEST_CASE("corpus evaluation averages instances and counts empty outputs") {
  std::vector<Tokens> gen = {{"a", "b"}, {}};
  std::vector<Tokens> ref = {{"a", "b"}, {"c"}};
  std::vector<Tokens> src = {{"a"}, {"c"}};
  auto report = evaluate_corpus(gen, ref, src);
  CHECK(report.empty_outputs == 1);
  CHECK(report.mean.r1.f == doctest::Approx(0.5));
  CHECK(report.instances[1].empty_output);
  auto j = report.to_json();
  CHECK(j["instances"] == 2);
  CHECK(j["per_instance"].size() == 2);
  CHECK_FALSE(report.to_json(false).contains("per_instance"));
  CHECK_THROWS_AS(evaluate_corpus(gen, ref, {{"a"}}), DataError);
}
