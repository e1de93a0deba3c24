#include "mathsel/reranker.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace mathsel {

std::string_view strategy_kind_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::RR_All:
      return "rr_all";
    case StrategyKind::RR_MajK:
      return "rr_majk";
    case StrategyKind::W_RR:
      return "w_rr";
    case StrategyKind::W_RR_MajK:
      return "w_rr_majk";
    case StrategyKind::Maj1:
      return "maj1";
    case StrategyKind::Maj1_TopN:
      return "maj1_topn";
  }
  return "unknown";
}

std::optional<StrategyKind> strategy_kind_from_name(std::string_view name) {
  for (StrategyKind k : {StrategyKind::RR_All, StrategyKind::RR_MajK, StrategyKind::W_RR,
                         StrategyKind::W_RR_MajK, StrategyKind::Maj1, StrategyKind::Maj1_TopN}) {
    if (strategy_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

std::string RerankStrategy::label() const {
  std::string s(strategy_kind_name(kind));
  if (restricted_to_top_clusters()) {
    s += "@" + std::to_string(top_clusters());
  } else if (kind == StrategyKind::Maj1_TopN && n) {
    s += "@" + std::to_string(*n);
  }
  return s;
}

namespace {

// Key used for voting; mirrors cluster_by_answer so missing answers never
// pool their votes.
std::string vote_key(const CandidateSolution& c) {
  return c.answer.no_answer() ? "none:#" + std::to_string(c.index)
                              : c.answer.canonical_key();
}

struct Prepared {
  std::vector<std::size_t> positions;  // candidate positions eligible for selection
  std::size_t scorer_calls = 0;
};

void validate_cluster_set(const ClusterSet& cs, std::span<const CandidateSolution> candidates,
                          const std::unordered_map<int, std::size_t>& by_index) {
  if (cs.total_candidates() != candidates.size()) {
    throw std::invalid_argument("cluster set does not cover exactly the given candidates");
  }
  for (const auto& cluster : cs.clusters) {
    for (int idx : cluster.members) {
      if (!by_index.count(idx)) {
        throw std::invalid_argument("cluster set references unknown candidate index " +
                                    std::to_string(idx));
      }
    }
  }
}

double require_score(const CandidateSolution& c, const RerankStrategy& strategy) {
  if (!c.score) {
    throw std::invalid_argument("strategy '" + strategy.label() +
                                "' requires scored candidates but candidate " +
                                std::to_string(c.index) + " has no score");
  }
  return *c.score;
}

}  // namespace

std::vector<int> eligible_indices(const RerankStrategy& strategy, const ClusterSet& cs,
                                  std::span<const CandidateSolution> candidates) {
  std::vector<int> out;
  if (!strategy.uses_scores()) return out;
  if (strategy.restricted_to_top_clusters()) {
    if (strategy.top_clusters() < 1) {
      throw std::invalid_argument("strategy '" + strategy.label() + "' requires k >= 1");
    }
    std::size_t take =
        std::min<std::size_t>(static_cast<std::size_t>(strategy.top_clusters()), cs.clusters.size());
    for (std::size_t i = 0; i < take; ++i) {
      out.insert(out.end(), cs.clusters[i].members.begin(), cs.clusters[i].members.end());
    }
  } else {
    out.reserve(candidates.size());
    for (const auto& c : candidates) out.push_back(c.index);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Selection select(const RerankStrategy& strategy, const ClusterSet& cs,
                 std::span<const CandidateSolution> candidates) {
  if (candidates.empty()) {
    throw std::invalid_argument("select requires at least one candidate");
  }
  if (strategy.kind == StrategyKind::Maj1_TopN) {
    if (!strategy.n) {
      throw std::invalid_argument("maj1_topn requires the pool size n");
    }
    if (*strategy.n < 1) throw std::invalid_argument("maj1_topn requires n >= 1");
  }

  std::unordered_map<int, std::size_t> by_index;
  for (std::size_t i = 0; i < candidates.size(); ++i) by_index[candidates[i].index] = i;
  if (by_index.size() != candidates.size()) {
    throw std::invalid_argument("duplicate candidate indices");
  }
  validate_cluster_set(cs, candidates, by_index);

  // The candidate pool the strategy's argmax runs over.
  std::vector<std::size_t> pool;
  if (strategy.restricted_to_top_clusters()) {
    for (int idx : eligible_indices(strategy, cs, candidates)) pool.push_back(by_index.at(idx));
  } else if (strategy.kind == StrategyKind::Maj1_TopN) {
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (const auto& c : candidates) require_score(c, strategy);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (*candidates[a].score != *candidates[b].score) {
        return *candidates[a].score > *candidates[b].score;
      }
      return candidates[a].index < candidates[b].index;
    });
    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(*strategy.n), order.size());
    pool.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
  } else {
    for (std::size_t i = 0; i < candidates.size(); ++i) pool.push_back(i);
  }

  // Objective value per pooled candidate.
  std::vector<double> value(pool.size(), 0.0);
  switch (strategy.kind) {
    case StrategyKind::RR_All:
    case StrategyKind::RR_MajK:
      for (std::size_t i = 0; i < pool.size(); ++i) {
        value[i] = require_score(candidates[pool[i]], strategy);
      }
      break;
    case StrategyKind::W_RR:
    case StrategyKind::W_RR_MajK: {
      // Equivalent members share one summed cluster score; summing per key
      // once keeps this linear in N. A missing answer is equivalent to
      // nothing, itself included, so it neither contributes nor collects.
      std::unordered_map<std::string, double> cluster_score;
      for (std::size_t p : pool) {
        double s = require_score(candidates[p], strategy);
        if (!candidates[p].answer.no_answer()) {
          cluster_score[vote_key(candidates[p])] += s;
        }
      }
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto& c = candidates[pool[i]];
        value[i] = c.answer.no_answer() ? 0.0 : cluster_score.at(vote_key(c));
      }
      break;
    }
    case StrategyKind::Maj1:
    case StrategyKind::Maj1_TopN: {
      std::unordered_map<std::string, double> freq;
      for (std::size_t p : pool) {
        if (!candidates[p].answer.no_answer()) freq[vote_key(candidates[p])] += 1.0;
      }
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto& c = candidates[pool[i]];
        value[i] = c.answer.no_answer() ? 0.0 : freq.at(vote_key(c));
      }
      break;
    }
  }

  const bool weighted =
      strategy.kind == StrategyKind::W_RR || strategy.kind == StrategyKind::W_RR_MajK;

  std::size_t best = 0;
  for (std::size_t i = 1; i < pool.size(); ++i) {
    const auto& a = candidates[pool[i]];
    const auto& b = candidates[pool[best]];
    if (value[i] != value[best]) {
      if (value[i] > value[best]) best = i;
      continue;
    }
    if (weighted && *a.score != *b.score) {
      if (*a.score > *b.score) best = i;
      continue;
    }
    if (a.index < b.index) best = i;
  }

  // A tie is worth noting only when distinct answers reach the maximum.
  std::optional<std::string> tie_note;
  {
    const std::string winner_key = vote_key(candidates[pool[best]]);
    std::size_t tied_keys = 0;
    std::unordered_map<std::string, bool> seen;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (value[i] == value[best]) {
        auto [it, inserted] = seen.try_emplace(vote_key(candidates[pool[i]]), true);
        if (inserted) ++tied_keys;
      }
    }
    if (tied_keys > 1) {
      tie_note = std::to_string(tied_keys) + " answers tied at objective value; picked " +
                 (weighted ? "highest score, then lowest index" : "lowest candidate index");
    }
  }

  Selection sel;
  sel.chosen = candidates[pool[best]];
  sel.strategy = strategy;
  sel.tie_note = std::move(tie_note);
  switch (strategy.kind) {
    case StrategyKind::Maj1:
      sel.scorer_calls = 0;
      break;
    case StrategyKind::RR_MajK:
    case StrategyKind::W_RR_MajK:
      sel.scorer_calls = pool.size();
      break;
    default:
      sel.scorer_calls = candidates.size();
      break;
  }
  return sel;
}

std::vector<SweepPoint> cost_curve(const RerankStrategy& strategy,
                                   std::span<const RankedProblem> problems,
                                   std::span<const int> params) {
  if (params.empty()) throw std::invalid_argument("cost_curve requires a non-empty sweep");
  const bool sweeps_k = strategy.restricted_to_top_clusters();
  const bool sweeps_n = strategy.kind == StrategyKind::Maj1_TopN;
  if (!sweeps_k && !sweeps_n) {
    throw std::invalid_argument("strategy '" + strategy.label() +
                                "' has no hyper-parameter to sweep");
  }

  std::vector<SweepPoint> out;
  out.reserve(params.size());
  for (int param : params) {
    RerankStrategy variant = strategy;
    if (sweeps_k) variant.k = param;
    if (sweeps_n) variant.n = param;

    SweepPoint point;
    point.param = param;
    std::size_t correct = 0;
    for (const auto& rp : problems) {
      Selection sel = select(variant, rp.clusters, rp.candidates);
      if (grade_equivalent(rp.truth, sel.chosen.answer)) ++correct;
      point.scorer_calls += sel.scorer_calls;
      ++point.problems;
    }
    point.accuracy = point.problems == 0 ? 0.0 : double(correct) / double(point.problems);
    out.push_back(point);
  }
  return out;
}

}  // namespace mathsel
