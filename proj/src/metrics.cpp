#include "mathsel/metrics.hpp"

#include <stdexcept>

namespace mathsel {

bool pass_at_1(const CandidateSolution& greedy_solution, const AnswerExpr& truth) {
  return grade_equivalent(truth, greedy_solution.answer);
}

bool pass_at_n(std::span<const CandidateSolution> candidates, const AnswerExpr& truth) {
  for (const auto& c : candidates) {
    if (grade_equivalent(truth, c.answer)) return true;
  }
  return false;
}

bool majk_at_n(const ClusterSet& cs, const AnswerExpr& truth, int k) {
  if (k < 1) throw std::invalid_argument("majk_at_n requires k >= 1");
  std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), cs.clusters.size());
  for (std::size_t i = 0; i < take; ++i) {
    if (grade_equivalent(truth, cs.clusters[i].representative)) return true;
  }
  return false;
}

MetricAggregate aggregate(std::span<const ProblemOutcome> outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("aggregate requires at least one outcome");

  MetricAggregate agg;
  agg.problems = outcomes.size();
  for (const auto& [k, v] : outcomes.front().majk_at_n) {
    (void)v;
    agg.majk[k] = MetricAccuracy{};
  }

  for (const auto& o : outcomes) {
    agg.pass1.count++;
    agg.passn.count++;
    agg.maj1.count++;
    if (o.pass_at_1) agg.pass1.correct++;
    if (o.pass_at_n) agg.passn.correct++;
    if (o.maj1_at_n) agg.maj1.correct++;
    if (o.majk_at_n.size() != agg.majk.size()) {
      throw std::invalid_argument("outcomes disagree on the set of k values");
    }
    for (const auto& [k, hit] : o.majk_at_n) {
      auto it = agg.majk.find(k);
      if (it == agg.majk.end()) {
        throw std::invalid_argument("outcomes disagree on the set of k values");
      }
      it->second.count++;
      if (hit) it->second.correct++;
    }
  }
  return agg;
}

}  // namespace mathsel
