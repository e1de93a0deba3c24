// metrics.hpp - per-problem evaluation outcomes and their aggregation

#pragma once

#include <map>
#include <span>
#include <string>

#include "mathsel/candidates.hpp"

namespace mathsel {

// Accuracy of a single greedy-decoded solution against the ground truth.
bool pass_at_1(const CandidateSolution& greedy_solution, const AnswerExpr& truth);

// Oracle accuracy over a sampled set: true iff any candidate grades correct.
bool pass_at_n(std::span<const CandidateSolution> candidates, const AnswerExpr& truth);

// True iff any of the top-k clusters' shared answers grades correct. k >= 1.
bool majk_at_n(const ClusterSet& cs, const AnswerExpr& truth, int k);

struct ProblemOutcome {
  std::string problem_id;
  bool pass_at_1 = false;
  bool pass_at_n = false;
  bool maj1_at_n = false;            // always equals majk_at_n.at(1)
  std::map<int, bool> majk_at_n;     // monotone non-decreasing in k
  std::string selected_answer;       // canonical key of the majority answer
};

struct MetricAccuracy {
  std::size_t correct = 0;
  std::size_t count = 0;

  double accuracy() const { return count == 0 ? 0.0 : double(correct) / double(count); }
};

struct MetricAggregate {
  std::size_t problems = 0;
  MetricAccuracy pass1;
  MetricAccuracy passn;
  MetricAccuracy maj1;
  std::map<int, MetricAccuracy> majk;
};

// Mean of the per-problem booleans, with exact counts kept alongside the
// percentages. Throws std::invalid_argument on an empty input or when the
// outcomes do not share the same set of k values.
MetricAggregate aggregate(std::span<const ProblemOutcome> outcomes);

}  // namespace mathsel
