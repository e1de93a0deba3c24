#include "mathsel/candidates.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace mathsel {

std::size_t ClusterSet::total_candidates() const {
  std::size_t n = 0;
  for (const auto& c : clusters) n += c.members.size();
  return n;
}

ClusterSet cluster_by_answer(std::span<const CandidateSolution> candidates,
                             std::string problem_id) {
  std::unordered_set<int> seen;
  for (const auto& c : candidates) {
    if (!seen.insert(c.index).second) {
      throw std::invalid_argument("duplicate candidate index " + std::to_string(c.index) +
                                  " in problem '" + problem_id + "'");
    }
  }

  std::unordered_map<std::string, AnswerCluster> groups;
  for (const auto& c : candidates) {
    // A missing answer is never equivalent to anything, itself included, so
    // each one forms a singleton cluster.
    std::string key = c.answer.no_answer()
                          ? "none:#" + std::to_string(c.index)
                          : c.answer.canonical_key();
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) it->second.canonical_key = key;
    it->second.members.push_back(c.index);
  }

  ClusterSet cs;
  cs.problem_id = std::move(problem_id);
  cs.clusters.reserve(groups.size());
  for (auto& [key, cluster] : groups) {
    std::sort(cluster.members.begin(), cluster.members.end());
    cs.clusters.push_back(std::move(cluster));
  }
  // Missing-answer singletons sort behind every real cluster: they carry no
  // vote, so they must never outrank an actual answer.
  auto is_none = [](const AnswerCluster& c) { return c.canonical_key.rfind("none:", 0) == 0; };
  std::sort(cs.clusters.begin(), cs.clusters.end(),
            [&](const AnswerCluster& a, const AnswerCluster& b) {
              if (is_none(a) != is_none(b)) return is_none(b);
              if (a.members.size() != b.members.size()) {
                return a.members.size() > b.members.size();
              }
              return a.members.front() < b.members.front();
            });

  std::unordered_map<int, const CandidateSolution*> by_index;
  for (const auto& c : candidates) by_index[c.index] = &c;
  for (auto& cluster : cs.clusters) {
    cluster.representative = by_index.at(cluster.members.front())->answer;
  }
  return cs;
}

std::vector<CandidateSolution> top_k_solutions(const ClusterSet& cs,
                                               std::span<const CandidateSolution> candidates,
                                               int k) {
  if (k < 1) throw std::invalid_argument("top_k_solutions requires k >= 1");

  std::unordered_map<int, const CandidateSolution*> by_index;
  for (const auto& c : candidates) by_index[c.index] = &c;

  std::vector<CandidateSolution> out;
  std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), cs.clusters.size());
  for (std::size_t i = 0; i < take; ++i) {
    for (int idx : cs.clusters[i].members) {
      auto it = by_index.find(idx);
      if (it == by_index.end()) {
        throw std::invalid_argument("cluster set references candidate index " +
                                    std::to_string(idx) + " not present in candidates");
      }
      out.push_back(*it->second);
    }
  }
  return out;
}

}  // namespace mathsel
