// candidates.hpp - problems, sampled solutions and answer-equivalence clusters

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mathsel/answers.hpp"

namespace mathsel {

struct Problem {
  std::string id;
  std::string statement;
  RawAnswer ground_truth;
  std::map<std::string, std::string> metadata;
};

struct CandidateSolution {
  int index = 0;  // sampling order, unique per problem
  std::string solution_text;
  AnswerExpr answer;
  std::optional<double> score;  // filled by a scorer backend, in [0,1]
  std::map<std::string, std::string> generation_meta;
};

// One equivalence class of candidates sharing a canonical answer key.
struct AnswerCluster {
  std::string canonical_key;
  std::vector<int> members;  // candidate indices, ascending
  AnswerExpr representative; // answer of the lowest-index member

  std::size_t frequency() const { return members.size(); }
};

// Clusters sorted by (frequency desc, smallest member index asc); the order
// is total, so ranking is deterministic and independent of input order.
struct ClusterSet {
  std::string problem_id;
  std::vector<AnswerCluster> clusters;

  std::size_t total_candidates() const;
};

// Groups candidates by canonical answer key. Keys are transitive by
// construction, unlike pairwise tolerant grading, so the result is a proper
// partition. Candidates flagged no_answer never share a cluster with anything.
// Throws std::invalid_argument on duplicate candidate indices.
ClusterSet cluster_by_answer(std::span<const CandidateSolution> candidates,
                             std::string problem_id = {});

// Concatenated members of the first min(k, #clusters) clusters, in cluster
// order. k must be >= 1.
std::vector<CandidateSolution> top_k_solutions(const ClusterSet& cs,
                                               std::span<const CandidateSolution> candidates,
                                               int k);

}  // namespace mathsel
