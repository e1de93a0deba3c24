// pipeline.hpp - dataset ingestion, run orchestration and report emission
//
// Input files are JSON lines:
//   problems    {"id", "statement", "ground_truth", "metadata"?}
//   candidates  {"problem_id", "index", "solution_text", "generation_meta"?}
//   scores      {"problem_id", "candidate_index", "p_correct", "p_incorrect"}
//
// A run clusters each problem's candidates, scores exactly the candidates
// each selection strategy reads (so the cost ledger mirrors the strategies'
// declared costs), grades every selection, and writes deterministic report
// files: report.jsonl, metrics.csv, aggregate.csv, ledger.csv, aggregate.md,
// plus sweep.csv and analysis CSVs when requested. Two runs with the same
// config and seed produce byte-identical data files.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mathsel/metrics.hpp"
#include "mathsel/reranker.hpp"
#include "mathsel/scorer.hpp"

namespace mathsel {

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScorerSpec {
  enum class Type { Replay, Synthetic, Remote };

  Type type = Type::Synthetic;
  std::filesystem::path replay_path;       // replay
  double rho = 0.75;                       // synthetic
  std::optional<std::uint64_t> seed;       // synthetic; defaults to the run seed
  RemoteScorerConfig remote;               // remote
};

struct SweepSpec {
  RerankStrategy strategy;
  std::vector<int> params;
};

struct RunConfig {
  std::filesystem::path dataset_path;
  std::filesystem::path candidate_path;
  ScorerSpec scorer;
  std::vector<RerankStrategy> strategies;
  std::vector<int> majk_values = {1, 2, 4, 8};  // always includes 1
  std::optional<SweepSpec> sweep;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  bool strict = true;
  int parallelism = 1;
  bool with_analysis = false;

  // Loads and validates a JSON config; relative paths resolve against the
  // config file's directory.
  static RunConfig from_file(const std::filesystem::path& path);
};

std::unique_ptr<ScorerBackend> make_scorer(const ScorerSpec& spec, std::uint64_t run_seed);

struct ProblemRecord {
  Problem problem;
  std::vector<CandidateSolution> candidates;
};

struct IngestStats {
  std::size_t problems = 0;
  std::size_t candidates = 0;
  std::vector<std::string> skipped;  // lenient mode: "<file>:<line>: reason"
};

// Joins candidates to problems by problem_id and parses every candidate
// answer. In strict mode the first malformed line, unknown problem id,
// duplicate, unusable ground truth or candidate-less problem aborts with an
// IngestError naming file and line; in lenient mode such records are skipped
// and reported through stats.
std::vector<ProblemRecord> ingest(const std::filesystem::path& dataset_path,
                                  const std::filesystem::path& candidate_path, bool strict,
                                  IngestStats* stats = nullptr);

struct SelectionRow {
  std::string strategy;
  int chosen_index = 0;
  std::string chosen_key;
  bool correct = false;
  std::size_t scorer_calls = 0;
  std::optional<std::string> tie_note;
};

struct ProblemRow {
  ProblemOutcome outcome;
  std::vector<SelectionRow> selections;
};

struct StrategyAggregate {
  std::string strategy;
  std::size_t problems = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::size_t scorer_calls_total = 0;
  double scorer_calls_mean = 0.0;
};

struct Exclusion {
  std::string problem_id;
  std::string reason;
};

struct EvalReport {
  std::vector<ProblemRow> rows;  // ordered by problem_id
  MetricAggregate metric_totals;
  std::vector<StrategyAggregate> strategy_table;
  CostLedger ledger;
  std::vector<Exclusion> exclusions;
  std::vector<SweepPoint> sweep;
  std::string sweep_strategy;
  std::uint64_t seed = 0;
  std::string scorer_name;
};

EvalReport run(const RunConfig& config);

void write_report(const EvalReport& report, const std::filesystem::path& out_dir);

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;  // fixed-width bins over [lo, hi]
};

struct ClusterAnalysis {
  // Fraction of correct candidates per problem.
  std::vector<std::pair<std::string, double>> correct_fraction;
  Histogram correct_fraction_hist;
  // Correct-cluster size over top-cluster size, restricted to problems where
  // majority voting picked a wrong answer but a correct cluster exists.
  std::vector<std::pair<std::string, double>> wrong_maj1_ratio;
  Histogram wrong_maj1_ratio_hist;
  // Oracle accuracy when any of the top-k clusters counts as a hit.
  std::vector<std::pair<int, double>> majk_curve;
};

ClusterAnalysis cluster_analysis(std::span<const ProblemRecord> records);

void write_analysis(const ClusterAnalysis& analysis, const std::filesystem::path& out_dir);

}  // namespace mathsel
