// scorer.hpp - the solution-evaluator contract
//
// An evaluator sees the fixed completion prompt for (problem, candidate) and
// returns the next-token probabilities of "correct" and "incorrect". The
// normalized score
//
//     s_cls = p_correct / (p_correct + p_incorrect)
//
// is computed here so every backend stays auditable: backends ship raw
// token-probability pairs, never pre-baked scalars.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "mathsel/candidates.hpp"

namespace mathsel {

struct ScoringPrompt {
  std::string text;
};

// Exact template rendering; the trailing space before the completion point is
// part of the contract.
ScoringPrompt build_prompt(const Problem& p, const CandidateSolution& x);

struct TokenProbPair {
  double p_correct = 0.0;
  double p_incorrect = 0.0;
};

class ScoringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// p_correct / (p_correct + p_incorrect). Throws ScoringError when the pair is
// unusable (negative or both zero). Scale-invariant; s(p,q) + s(q,p) == 1.
double s_cls(const TokenProbPair& t);

struct ScoreQuery {
  const Problem* problem = nullptr;
  const CandidateSolution* candidate = nullptr;
};

// A source of ("correct", "incorrect") token probabilities. Implementations
// must be deterministic for identical inputs and configuration, keep output
// order aligned with input order, and tolerate concurrent score_batch calls
// on different problems.
class ScorerBackend {
 public:
  virtual ~ScorerBackend() = default;
  virtual std::vector<TokenProbPair> score_batch(std::span<const ScoreQuery> queries) = 0;
  virtual std::string name() const = 0;
};

// Keyed lookup from a score file: JSON lines of
//   {"problem_id": str, "candidate_index": int, "p_correct": num, "p_incorrect": num}
class ReplayScorer final : public ScorerBackend {
 public:
  explicit ReplayScorer(const std::filesystem::path& score_file);

  std::vector<TokenProbPair> score_batch(std::span<const ScoreQuery> queries) override;
  std::string name() const override { return "replay"; }

 private:
  std::unordered_map<std::string, TokenProbPair> table_;
};

// Parameterized noisy oracle. With probability rho the emitted pair favours
// the true grade of the candidate (correct solutions land above 0.5,
// incorrect ones below), otherwise the pair is inverted. Draws are seeded per
// (problem id, candidate index), so scores are reproducible and independent
// of call order.
class SyntheticScorer final : public ScorerBackend {
 public:
  SyntheticScorer(double rho, std::uint64_t seed);

  std::vector<TokenProbPair> score_batch(std::span<const ScoreQuery> queries) override;
  std::string name() const override { return "synthetic"; }

  double rho() const { return rho_; }
  std::uint64_t seed() const { return seed_; }

 private:
  double rho_;
  std::uint64_t seed_;
};

struct RemoteScorerConfig {
  std::string url;  // e.g. "http://127.0.0.1:8080/score"
  int timeout_ms = 5000;
  int max_retries = 2;    // attempts = 1 + max_retries
  int max_inflight = 4;   // concurrent request cap
};

// Network client. One POST per candidate; the request body is a single JSON
// object line {"problem", "solution", "prompt"}, the response must be
// {"p_correct": num, "p_incorrect": num}. Non-2xx statuses and malformed
// responses count as backend failures and are retried up to max_retries.
class RemoteScorer final : public ScorerBackend {
 public:
  explicit RemoteScorer(RemoteScorerConfig config);

  std::vector<TokenProbPair> score_batch(std::span<const ScoreQuery> queries) override;
  std::string name() const override { return "remote"; }

 private:
  TokenProbPair score_one(const ScoreQuery& q) const;

  RemoteScorerConfig config_;
  std::string host_;
  int port_ = 80;
  std::string path_;
};

// Exact count of scorer invocations, attributed per problem and context
// (typically a strategy label). Entries merge associatively.
struct CostLedger {
  struct Entry {
    std::string problem_id;
    std::string context;
    std::size_t calls = 0;
  };

  std::vector<Entry> entries;

  void record(std::string problem_id, std::string context, std::size_t calls);
  void merge(CostLedger&& other);
  std::size_t total() const;
};

// Scores every candidate (one scorer call each), fills in the s_cls scores
// and records the call count. All-or-nothing: a backend failure propagates
// and leaves the ledger untouched.
std::vector<CandidateSolution> score_candidates(ScorerBackend& backend, const Problem& p,
                                                std::span<const CandidateSolution> xs,
                                                CostLedger& ledger,
                                                const std::string& context = "score");

}  // namespace mathsel
