#include "mathsel/scorer.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"

namespace mathsel {

ScoringPrompt build_prompt(const Problem& p, const CandidateSolution& x) {
  std::string text = "Here is a math problem: " + p.statement +
                     ". Here is a candidate solution: " + x.solution_text +
                     ". The above candidate solution is ";
  return ScoringPrompt{std::move(text)};
}

double s_cls(const TokenProbPair& t) {
  if (!(t.p_correct >= 0.0) || !(t.p_incorrect >= 0.0)) {
    throw ScoringError("token probabilities must be non-negative and finite");
  }
  // The sum is formed in extended precision so that cleanly representable
  // ratios (0.6, 0.2) -> 0.75 come out exact.
  const long double pc = t.p_correct;
  const long double pi = t.p_incorrect;
  const long double denom = pc + pi;
  if (denom <= 0.0L) {
    throw ScoringError("unusable token probabilities: p_correct + p_incorrect is zero");
  }
  return static_cast<double>(pc / denom);
}

// ---------------------------------------------------------------------------
// ReplayScorer
// ---------------------------------------------------------------------------

namespace {

std::string replay_key(const std::string& problem_id, int index) {
  return problem_id + '\x1f' + std::to_string(index);
}

}  // namespace

ReplayScorer::ReplayScorer(const std::filesystem::path& score_file) {
  std::ifstream in(score_file);
  if (!in) {
    throw ScoringError("cannot open score file: " + score_file.string());
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      TokenProbPair t{j.at("p_correct").get<double>(), j.at("p_incorrect").get<double>()};
      table_[replay_key(j.at("problem_id").get<std::string>(),
                        j.at("candidate_index").get<int>())] = t;
    } catch (const nlohmann::json::exception& e) {
      throw ScoringError("malformed score file line " + std::to_string(line_no) + ": " +
                         e.what());
    }
  }
}

std::vector<TokenProbPair> ReplayScorer::score_batch(std::span<const ScoreQuery> queries) {
  std::vector<TokenProbPair> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    auto it = table_.find(replay_key(q.problem->id, q.candidate->index));
    if (it == table_.end()) {
      throw ScoringError("no replay score for problem '" + q.problem->id + "' candidate " +
                         std::to_string(q.candidate->index));
    }
    out.push_back(it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------
// SyntheticScorer
// ---------------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

SyntheticScorer::SyntheticScorer(double rho, std::uint64_t seed) : rho_(rho), seed_(seed) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw ScoringError("synthetic scorer discrimination rho must be in [0,1]");
  }
}

std::vector<TokenProbPair> SyntheticScorer::score_batch(std::span<const ScoreQuery> queries) {
  std::vector<TokenProbPair> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    AnswerExpr truth = parse_answer(q.problem->ground_truth);
    bool correct = grade_equivalent(truth, q.candidate->answer);

    std::uint64_t state = splitmix64(seed_ ^ splitmix64(fnv1a(q.problem->id)) ^
                                     splitmix64(static_cast<std::uint64_t>(q.candidate->index) +
                                                0x51ed270b7a4af8a1ULL));
    std::mt19937_64 rng(state);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    bool consistent = unit(rng) < rho_;
    // Probability mass strictly separated around 0.5 so a favoured candidate
    // always outscores a disfavoured one.
    double lo = 0.0005 + 0.499 * unit(rng);
    double hi = 0.5005 + 0.499 * unit(rng);
    bool favour = consistent ? correct : !correct;
    out.push_back(favour ? TokenProbPair{hi, lo} : TokenProbPair{lo, hi});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ledger and batch scoring
// ---------------------------------------------------------------------------

void CostLedger::record(std::string problem_id, std::string context, std::size_t calls) {
  entries.push_back(Entry{std::move(problem_id), std::move(context), calls});
}

void CostLedger::merge(CostLedger&& other) {
  entries.insert(entries.end(), std::make_move_iterator(other.entries.begin()),
                 std::make_move_iterator(other.entries.end()));
  other.entries.clear();
}

std::size_t CostLedger::total() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.calls;
  return n;
}

std::vector<CandidateSolution> score_candidates(ScorerBackend& backend, const Problem& p,
                                                std::span<const CandidateSolution> xs,
                                                CostLedger& ledger, const std::string& context) {
  std::vector<ScoreQuery> queries;
  queries.reserve(xs.size());
  for (const auto& x : xs) queries.push_back(ScoreQuery{&p, &x});

  std::vector<TokenProbPair> probs;
  try {
    probs = backend.score_batch(queries);
  } catch (const ScoringError&) {
    throw;  // all-or-nothing: nothing recorded, no partial scores
  }
  if (probs.size() != xs.size()) {
    throw ScoringError("backend '" + backend.name() + "' returned " +
                       std::to_string(probs.size()) + " scores for " +
                       std::to_string(xs.size()) + " candidates");
  }

  std::vector<CandidateSolution> out(xs.begin(), xs.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].score = s_cls(probs[i]);
  }
  ledger.record(p.id, context, out.size());
  return out;
}

}  // namespace mathsel
