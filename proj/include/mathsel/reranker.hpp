// reranker.hpp - candidate-selection strategies over scored, clustered solutions
//
// Six interchangeable rules decide which candidate a run submits as its final
// answer, together with an exact count of the scorer calls the rule requires:
//
//   rr_all      argmax of s_cls over every candidate            cost N
//   rr_majk     argmax of s_cls over the top-K clusters         cost |top-K members|
//   w_rr        argmax of summed cluster score                  cost N
//   w_rr_majk   w_rr restricted to the top-K clusters           cost |top-K members|
//   maj1        plain majority voting, no scorer involved       cost 0
//   maj1_topn   majority voting among the N highest-scored      cost N
//
// Ties on the strategy's objective fall back to the higher individual score
// (weighted strategies only) and then to the lower candidate index; the
// voting strategies resolve ties purely by candidate index so their outcome
// never depends on whether scores happen to be present.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mathsel/candidates.hpp"

namespace mathsel {

enum class StrategyKind { RR_All, RR_MajK, W_RR, W_RR_MajK, Maj1, Maj1_TopN };

std::string_view strategy_kind_name(StrategyKind k);
std::optional<StrategyKind> strategy_kind_from_name(std::string_view name);

struct RerankStrategy {
  static constexpr int kDefaultTopClusters = 8;

  StrategyKind kind = StrategyKind::Maj1;
  std::optional<int> k;  // top-cluster count for the MajK variants
  std::optional<int> n;  // pool size for Maj1_TopN (required, no default)

  int top_clusters() const { return k.value_or(kDefaultTopClusters); }
  bool uses_scores() const { return kind != StrategyKind::Maj1; }
  bool restricted_to_top_clusters() const {
    return kind == StrategyKind::RR_MajK || kind == StrategyKind::W_RR_MajK;
  }
  // e.g. "rr_majk@8", "maj1_topn@16", "maj1"
  std::string label() const;
};

struct Selection {
  CandidateSolution chosen;
  RerankStrategy strategy;
  std::size_t scorer_calls = 0;
  std::optional<std::string> tie_note;
};

// Candidate indices (values of CandidateSolution::index) that the strategy
// reads scores for; empty for maj1. This is exactly the set a pipeline must
// score before calling select.
std::vector<int> eligible_indices(const RerankStrategy& strategy, const ClusterSet& cs,
                                  std::span<const CandidateSolution> candidates);

// Applies the strategy. Preconditions (violations throw std::invalid_argument):
// candidates non-empty, the cluster set was built from exactly these
// candidates, and every candidate the strategy reads carries a score.
Selection select(const RerankStrategy& strategy, const ClusterSet& cs,
                 std::span<const CandidateSolution> candidates);

// One problem prepared for strategy evaluation: parsed truth, clusters and a
// fully scored candidate list.
struct RankedProblem {
  Problem problem;
  AnswerExpr truth;
  ClusterSet clusters;
  std::vector<CandidateSolution> candidates;
};

struct SweepPoint {
  int param = 0;          // k for the MajK variants, n for maj1_topn
  double accuracy = 0.0;  // fraction of problems whose chosen answer grades correct
  std::size_t scorer_calls = 0;  // summed over problems
  std::size_t problems = 0;
};

// Accuracy / cost trade-off of a parameterized strategy across a fixture set.
// Only rr_majk, w_rr_majk and maj1_topn accept a parameter sweep.
std::vector<SweepPoint> cost_curve(const RerankStrategy& strategy,
                                   std::span<const RankedProblem> problems,
                                   std::span<const int> params);

}  // namespace mathsel
