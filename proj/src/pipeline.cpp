#include "mathsel/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "json.hpp"

namespace mathsel {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string location(const std::filesystem::path& file, std::size_t line) {
  return file.filename().string() + ":" + std::to_string(line);
}

std::string stringify_meta_value(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::map<std::string, std::string> parse_meta(const nlohmann::json& j, const char* field) {
  std::map<std::string, std::string> meta;
  if (!j.contains(field)) return meta;
  for (const auto& [key, value] : j.at(field).items()) {
    meta[key] = stringify_meta_value(value);
  }
  return meta;
}

// Deterministic number formatting shared by every emitted file.
std::string fmt(double v) { return double_text(v); }

}  // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

RerankStrategy strategy_from_json(const nlohmann::json& j) {
  RerankStrategy s;
  auto kind = strategy_kind_from_name(j.at("kind").get<std::string>());
  if (!kind) {
    throw IngestError("unknown strategy kind '" + j.at("kind").get<std::string>() + "'");
  }
  s.kind = *kind;
  if (j.contains("k")) s.k = j.at("k").get<int>();
  if (j.contains("n")) s.n = j.at("n").get<int>();
  if (s.restricted_to_top_clusters() && s.top_clusters() < 1) {
    throw IngestError("strategy '" + s.label() + "' requires k >= 1");
  }
  if (s.kind == StrategyKind::Maj1_TopN && (!s.n || *s.n < 1)) {
    throw IngestError("maj1_topn requires n >= 1");
  }
  return s;
}

}  // namespace

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError("malformed config " + path.string() + ": " + e.what());
  }

  const std::filesystem::path base = path.has_parent_path() ? path.parent_path() : ".";
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  RunConfig cfg;
  try {
    cfg.dataset_path = resolve(j.at("dataset").get<std::string>());
    cfg.candidate_path = resolve(j.at("candidates").get<std::string>());

    const auto& sj = j.at("scorer");
    std::string type = sj.at("type").get<std::string>();
    if (type == "replay") {
      cfg.scorer.type = ScorerSpec::Type::Replay;
      cfg.scorer.replay_path = resolve(sj.at("path").get<std::string>());
    } else if (type == "synthetic") {
      cfg.scorer.type = ScorerSpec::Type::Synthetic;
      cfg.scorer.rho = sj.at("rho").get<double>();
      if (sj.contains("seed")) cfg.scorer.seed = sj.at("seed").get<std::uint64_t>();
    } else if (type == "remote") {
      cfg.scorer.type = ScorerSpec::Type::Remote;
      cfg.scorer.remote.url = sj.at("url").get<std::string>();
      if (sj.contains("timeout_ms")) cfg.scorer.remote.timeout_ms = sj.at("timeout_ms").get<int>();
      if (sj.contains("max_retries")) cfg.scorer.remote.max_retries = sj.at("max_retries").get<int>();
      if (sj.contains("max_inflight")) cfg.scorer.remote.max_inflight = sj.at("max_inflight").get<int>();
    } else {
      throw IngestError("unknown scorer type '" + type + "'");
    }

    if (j.contains("strategies")) {
      for (const auto& stj : j.at("strategies")) cfg.strategies.push_back(strategy_from_json(stj));
    }
    if (j.contains("majk_values")) {
      cfg.majk_values = j.at("majk_values").get<std::vector<int>>();
    }
    if (j.contains("sweep")) {
      SweepSpec sweep;
      sweep.strategy = strategy_from_json(j.at("sweep").at("strategy"));
      sweep.params = j.at("sweep").at("params").get<std::vector<int>>();
      if (sweep.params.empty()) throw IngestError("sweep.params must be non-empty");
      cfg.sweep = std::move(sweep);
    }
    if (j.contains("output_dir")) cfg.output_dir = resolve(j.at("output_dir").get<std::string>());
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("strict")) cfg.strict = j.at("strict").get<bool>();
    if (j.contains("parallelism")) cfg.parallelism = std::max(1, j.at("parallelism").get<int>());
    if (j.contains("with_analysis")) cfg.with_analysis = j.at("with_analysis").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw IngestError("invalid config " + path.string() + ": " + e.what());
  }

  for (int k : cfg.majk_values) {
    if (k < 1) throw IngestError("majk_values entries must be >= 1");
  }
  cfg.majk_values.push_back(1);  // maj1 is always defined
  std::sort(cfg.majk_values.begin(), cfg.majk_values.end());
  cfg.majk_values.erase(std::unique(cfg.majk_values.begin(), cfg.majk_values.end()),
                        cfg.majk_values.end());

  if (cfg.strategies.empty() && cfg.majk_values.empty()) {
    throw IngestError("config requests no strategies and no metrics");
  }
  if (!std::filesystem::exists(cfg.dataset_path)) {
    throw IngestError("dataset file does not exist: " + cfg.dataset_path.string());
  }
  if (!std::filesystem::exists(cfg.candidate_path)) {
    throw IngestError("candidates file does not exist: " + cfg.candidate_path.string());
  }
  if (cfg.scorer.type == ScorerSpec::Type::Replay &&
      !std::filesystem::exists(cfg.scorer.replay_path)) {
    throw IngestError("replay score file does not exist: " + cfg.scorer.replay_path.string());
  }
  return cfg;
}

std::unique_ptr<ScorerBackend> make_scorer(const ScorerSpec& spec, std::uint64_t run_seed) {
  switch (spec.type) {
    case ScorerSpec::Type::Replay:
      return std::make_unique<ReplayScorer>(spec.replay_path);
    case ScorerSpec::Type::Synthetic:
      return std::make_unique<SyntheticScorer>(spec.rho, spec.seed.value_or(run_seed));
    case ScorerSpec::Type::Remote:
      return std::make_unique<RemoteScorer>(spec.remote);
  }
  throw IngestError("unsupported scorer spec");
}

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

namespace {

// Applies `handle` to every non-blank JSONL line; `handle` throws IngestError
// to flag a bad record. Strict mode rethrows, lenient mode records and skips.
void for_each_jsonl(const std::filesystem::path& file, bool strict, IngestStats* stats,
                    const std::function<void(const nlohmann::json&, std::size_t)>& handle) {
  std::ifstream in(file);
  if (!in) throw IngestError("cannot open file: " + file.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw IngestError(location(file, line_no) + ": malformed JSON: " + e.what());
      }
      handle(j, line_no);
    } catch (const IngestError& e) {
      if (strict) throw;
      if (stats) stats->skipped.push_back(e.what());
    }
  }
}

}  // namespace

std::vector<ProblemRecord> ingest(const std::filesystem::path& dataset_path,
                                  const std::filesystem::path& candidate_path, bool strict,
                                  IngestStats* stats) {
  std::vector<ProblemRecord> records;
  std::unordered_map<std::string, std::size_t> by_id;

  for_each_jsonl(dataset_path, strict, stats, [&](const nlohmann::json& j, std::size_t line_no) {
    Problem p;
    try {
      p.id = j.at("id").get<std::string>();
      p.statement = j.at("statement").get<std::string>();
      p.ground_truth =
          RawAnswer{j.at("ground_truth").get<std::string>(), ExtractionRule::Explicit, false, false};
      p.metadata = parse_meta(j, "metadata");
    } catch (const nlohmann::json::exception& e) {
      throw IngestError(location(dataset_path, line_no) + ": bad problem record: " + e.what());
    }
    if (by_id.count(p.id)) {
      throw IngestError(location(dataset_path, line_no) + ": duplicate problem id '" + p.id + "'");
    }
    if (parse_answer(p.ground_truth).no_answer()) {
      throw IngestError(location(dataset_path, line_no) + ": problem '" + p.id +
                        "' has an unusable ground truth");
    }
    by_id[p.id] = records.size();
    records.push_back(ProblemRecord{std::move(p), {}});
  });

  for_each_jsonl(candidate_path, strict, stats, [&](const nlohmann::json& j, std::size_t line_no) {
    std::string problem_id;
    CandidateSolution c;
    try {
      problem_id = j.at("problem_id").get<std::string>();
      c.index = j.at("index").get<int>();
      c.solution_text = j.at("solution_text").get<std::string>();
      c.generation_meta = parse_meta(j, "generation_meta");
    } catch (const nlohmann::json::exception& e) {
      throw IngestError(location(candidate_path, line_no) + ": bad candidate record: " + e.what());
    }
    auto it = by_id.find(problem_id);
    if (it == by_id.end()) {
      throw IngestError(location(candidate_path, line_no) + ": candidate references unknown problem id '" +
                        problem_id + "'");
    }
    auto& record = records[it->second];
    for (const auto& existing : record.candidates) {
      if (existing.index == c.index) {
        throw IngestError(location(candidate_path, line_no) + ": duplicate candidate index " +
                          std::to_string(c.index) + " for problem '" + problem_id + "'");
      }
    }
    c.answer = parse_answer(extract_answer(c.solution_text));
    record.candidates.push_back(std::move(c));
  });

  // Drop (lenient) or reject (strict) problems that ended up without candidates.
  std::vector<ProblemRecord> out;
  out.reserve(records.size());
  for (auto& r : records) {
    if (r.candidates.empty()) {
      std::string msg = "problem '" + r.problem.id + "' has no candidates";
      if (strict) throw IngestError(msg);
      if (stats) stats->skipped.push_back(msg);
      continue;
    }
    std::sort(r.candidates.begin(), r.candidates.end(),
              [](const CandidateSolution& a, const CandidateSolution& b) {
                return a.index < b.index;
              });
    out.push_back(std::move(r));
  }
  if (stats) {
    stats->problems = out.size();
    for (const auto& r : out) stats->candidates += r.candidates.size();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run
// ---------------------------------------------------------------------------

namespace {

const CandidateSolution& greedy_candidate(const ProblemRecord& record) {
  for (const auto& c : record.candidates) {
    auto it = c.generation_meta.find("greedy");
    if (it != c.generation_meta.end() && it->second == "true") return c;
  }
  return record.candidates.front();  // candidates are sorted by index
}

struct PerProblemResult {
  ProblemRow row;
  CostLedger ledger;
  bool excluded = false;
  std::string exclusion_reason;
  std::vector<CandidateSolution> sweep_scored;  // filled when a sweep runs
};

PerProblemResult evaluate_problem(const ProblemRecord& record, const RunConfig& config,
                                  ScorerBackend& backend) {
  PerProblemResult result;
  const auto& problem = record.problem;
  const auto& candidates = record.candidates;

  AnswerExpr truth = parse_answer(problem.ground_truth);
  ClusterSet clusters = cluster_by_answer(candidates, problem.id);

  ProblemOutcome outcome;
  outcome.problem_id = problem.id;
  outcome.pass_at_1 = pass_at_1(greedy_candidate(record), truth);
  outcome.pass_at_n = pass_at_n(candidates, truth);
  for (int k : config.majk_values) outcome.majk_at_n[k] = majk_at_n(clusters, truth, k);
  outcome.maj1_at_n = outcome.majk_at_n.at(1);
  outcome.selected_answer = clusters.clusters.empty() ? "" : clusters.clusters.front().canonical_key;
  result.row.outcome = std::move(outcome);

  try {
    // Each strategy pays for exactly the candidates it reads, so the ledger
    // reconciles with the per-selection costs.
    for (const auto& strategy : config.strategies) {
      std::vector<CandidateSolution> scored(candidates.begin(), candidates.end());
      if (strategy.uses_scores()) {
        std::vector<int> wanted = eligible_indices(strategy, clusters, candidates);
        std::vector<CandidateSolution> subset;
        subset.reserve(wanted.size());
        std::unordered_map<int, std::size_t> position;
        for (std::size_t i = 0; i < scored.size(); ++i) position[scored[i].index] = i;
        for (int idx : wanted) subset.push_back(scored[position.at(idx)]);
        std::vector<CandidateSolution> with_scores =
            score_candidates(backend, problem, subset, result.ledger, strategy.label());
        for (const auto& s : with_scores) scored[position.at(s.index)].score = s.score;
      }
      Selection sel = select(strategy, clusters, scored);
      SelectionRow row;
      row.strategy = strategy.label();
      row.chosen_index = sel.chosen.index;
      row.chosen_key = sel.chosen.answer.no_answer() ? "none:#" + std::to_string(sel.chosen.index)
                                                     : sel.chosen.answer.canonical_key();
      row.correct = grade_equivalent(truth, sel.chosen.answer);
      row.scorer_calls = sel.scorer_calls;
      row.tie_note = sel.tie_note;
      result.row.selections.push_back(std::move(row));
    }

    if (config.sweep) {
      // Sweeps evaluate several parameter values against one fully scored
      // candidate list; the one-off scoring cost is ledgered separately.
      result.sweep_scored = score_candidates(
          backend, problem, candidates, result.ledger,
          "sweep:" + std::string(strategy_kind_name(config.sweep->strategy.kind)));
    }
  } catch (const ScoringError& e) {
    if (config.strict) throw;
    result.excluded = true;
    result.exclusion_reason = e.what();
    result.ledger.entries.clear();
    result.row.selections.clear();
    result.sweep_scored.clear();
  }
  return result;
}

}  // namespace

EvalReport run(const RunConfig& config) {
  IngestStats stats;
  std::vector<ProblemRecord> records =
      ingest(config.dataset_path, config.candidate_path, config.strict, &stats);
  if (records.empty()) throw IngestError("no problems to evaluate");

  std::unique_ptr<ScorerBackend> backend = make_scorer(config.scorer, config.seed);

  std::vector<PerProblemResult> results(records.size());
  {
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(1, config.parallelism)),
                              records.size());
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= records.size()) return;
        {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (failure) return;
        }
        try {
          results[i] = evaluate_problem(records[i], config, *backend);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    if (workers <= 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
      for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
  }

  EvalReport report;
  report.seed = config.seed;
  report.scorer_name = backend->name();

  // Assemble in problem order, then sort rows by id for a stable report.
  std::vector<ProblemOutcome> outcomes;
  for (auto& r : results) {
    if (r.excluded) {
      report.exclusions.push_back(Exclusion{r.row.outcome.problem_id, r.exclusion_reason});
      continue;
    }
    report.ledger.merge(std::move(r.ledger));
    outcomes.push_back(r.row.outcome);
    report.rows.push_back(std::move(r.row));
  }
  for (const auto& skipped : stats.skipped) {
    report.exclusions.push_back(Exclusion{"", skipped});
  }
  if (report.rows.empty()) throw IngestError("every problem was excluded from the run");

  std::sort(report.rows.begin(), report.rows.end(), [](const ProblemRow& a, const ProblemRow& b) {
    return a.outcome.problem_id < b.outcome.problem_id;
  });
  report.metric_totals = aggregate(outcomes);

  // Per-strategy aggregates in config order.
  for (const auto& strategy : config.strategies) {
    StrategyAggregate agg;
    agg.strategy = strategy.label();
    for (const auto& row : report.rows) {
      for (const auto& sel : row.selections) {
        if (sel.strategy != agg.strategy) continue;
        agg.problems++;
        if (sel.correct) agg.correct++;
        agg.scorer_calls_total += sel.scorer_calls;
      }
    }
    agg.accuracy = agg.problems ? double(agg.correct) / double(agg.problems) : 0.0;
    agg.scorer_calls_mean =
        agg.problems ? double(agg.scorer_calls_total) / double(agg.problems) : 0.0;
    report.strategy_table.push_back(std::move(agg));
  }

  if (config.sweep) {
    std::vector<RankedProblem> ranked;
    ranked.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (results[i].excluded) continue;
      RankedProblem rp;
      rp.problem = records[i].problem;
      rp.truth = parse_answer(records[i].problem.ground_truth);
      rp.clusters = cluster_by_answer(records[i].candidates, records[i].problem.id);
      rp.candidates = std::move(results[i].sweep_scored);
      ranked.push_back(std::move(rp));
    }
    report.sweep = cost_curve(config.sweep->strategy, ranked, config.sweep->params);
    report.sweep_strategy = std::string(strategy_kind_name(config.sweep->strategy.kind));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write file: " + path.string());
  out << content;
}

std::string metric_name(int k) { return "maj" + std::to_string(k) + "@n"; }

}  // namespace

void write_report(const EvalReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  // report.jsonl
  {
    std::string body;
    for (const auto& row : report.rows) {
      ordered_json j;
      j["schema_version"] = 1;
      j["problem_id"] = row.outcome.problem_id;
      j["pass_at_1"] = row.outcome.pass_at_1;
      j["pass_at_n"] = row.outcome.pass_at_n;
      j["maj1_at_n"] = row.outcome.maj1_at_n;
      ordered_json majk = ordered_json::object();
      for (const auto& [k, hit] : row.outcome.majk_at_n) majk[std::to_string(k)] = hit;
      j["majk_at_n"] = majk;
      j["selected_answer"] = row.outcome.selected_answer;
      ordered_json sels = ordered_json::array();
      for (const auto& sel : row.selections) {
        ordered_json sj;
        sj["strategy"] = sel.strategy;
        sj["chosen_index"] = sel.chosen_index;
        sj["chosen_key"] = sel.chosen_key;
        sj["correct"] = sel.correct;
        sj["scorer_calls"] = sel.scorer_calls;
        if (sel.tie_note) {
          sj["tie_note"] = *sel.tie_note;
        } else {
          sj["tie_note"] = nullptr;
        }
        sels.push_back(std::move(sj));
      }
      j["selections"] = std::move(sels);
      body += j.dump();
      body += '\n';
    }
    write_file(out_dir / "report.jsonl", body);
  }

  // metrics.csv
  {
    std::string body = "metric,correct,count,accuracy\n";
    auto add = [&](const std::string& name, const MetricAccuracy& acc) {
      body += name + "," + std::to_string(acc.correct) + "," + std::to_string(acc.count) + "," +
              fmt(acc.accuracy()) + "\n";
    };
    add("pass@1", report.metric_totals.pass1);
    add("pass@n", report.metric_totals.passn);
    add("maj1@n", report.metric_totals.maj1);
    for (const auto& [k, acc] : report.metric_totals.majk) {
      if (k > 1) add(metric_name(k), acc);  // k=1 is the maj1@n row
    }
    write_file(out_dir / "metrics.csv", body);
  }

  // aggregate.csv
  {
    std::string body = "strategy,problems,correct,accuracy,scorer_calls_total,scorer_calls_mean\n";
    for (const auto& agg : report.strategy_table) {
      body += agg.strategy + "," + std::to_string(agg.problems) + "," +
              std::to_string(agg.correct) + "," + fmt(agg.accuracy) + "," +
              std::to_string(agg.scorer_calls_total) + "," + fmt(agg.scorer_calls_mean) + "\n";
    }
    write_file(out_dir / "aggregate.csv", body);
  }

  // ledger.csv
  {
    std::string body = "problem_id,context,calls\n";
    for (const auto& e : report.ledger.entries) {
      body += e.problem_id + "," + e.context + "," + std::to_string(e.calls) + "\n";
    }
    write_file(out_dir / "ledger.csv", body);
  }

  // exclusions.csv
  if (!report.exclusions.empty()) {
    std::string body = "problem_id,reason\n";
    for (const auto& e : report.exclusions) {
      std::string reason = e.reason;
      std::replace(reason.begin(), reason.end(), ',', ';');
      std::replace(reason.begin(), reason.end(), '\n', ' ');
      body += e.problem_id + "," + reason + "\n";
    }
    write_file(out_dir / "exclusions.csv", body);
  }

  // sweep.csv
  if (!report.sweep.empty()) {
    std::string body = "strategy,param,problems,accuracy,scorer_calls_total,scorer_calls_mean\n";
    for (const auto& p : report.sweep) {
      double mean = p.problems ? double(p.scorer_calls) / double(p.problems) : 0.0;
      body += report.sweep_strategy + "," + std::to_string(p.param) + "," +
              std::to_string(p.problems) + "," + fmt(p.accuracy) + "," +
              std::to_string(p.scorer_calls) + "," + fmt(mean) + "\n";
    }
    write_file(out_dir / "sweep.csv", body);
  }

  // aggregate.md
  {
    char pct[32];
    std::string body = "# Evaluation report\n\n";
    body += "- scorer: " + report.scorer_name + "\n";
    body += "- seed: " + std::to_string(report.seed) + "\n";
    body += "- problems evaluated: " + std::to_string(report.rows.size()) + "\n";
    body += "- problems excluded: " + std::to_string(report.exclusions.size()) + "\n";
    body += "- scorer calls (ledger total): " + std::to_string(report.ledger.total()) + "\n";
    body += "\n## Metrics\n\n| metric | correct | count | accuracy |\n|---|---|---|---|\n";
    auto add_metric = [&](const std::string& name, const MetricAccuracy& acc) {
      std::snprintf(pct, sizeof(pct), "%.1f%%", 100.0 * acc.accuracy());
      body += "| " + name + " | " + std::to_string(acc.correct) + " | " +
              std::to_string(acc.count) + " | " + pct + " |\n";
    };
    add_metric("pass@1", report.metric_totals.pass1);
    add_metric("pass@n", report.metric_totals.passn);
    add_metric("maj1@n", report.metric_totals.maj1);
    for (const auto& [k, acc] : report.metric_totals.majk) {
      if (k > 1) add_metric(metric_name(k), acc);
    }
    if (!report.strategy_table.empty()) {
      body += "\n## Strategies\n\n| strategy | problems | correct | accuracy | scorer calls (mean) |\n|---|---|---|---|---|\n";
      for (const auto& agg : report.strategy_table) {
        char mean[32];
        std::snprintf(pct, sizeof(pct), "%.1f%%", 100.0 * agg.accuracy);
        std::snprintf(mean, sizeof(mean), "%.2f", agg.scorer_calls_mean);
        body += "| " + agg.strategy + " | " + std::to_string(agg.problems) + " | " +
                std::to_string(agg.correct) + " | " + pct + " | " + mean + " |\n";
      }
    }
    if (!report.sweep.empty()) {
      body += "\n## Sweep (" + report.sweep_strategy + ")\n\n| param | accuracy | scorer calls |\n|---|---|---|\n";
      for (const auto& p : report.sweep) {
        std::snprintf(pct, sizeof(pct), "%.1f%%", 100.0 * p.accuracy);
        body += "| " + std::to_string(p.param) + " | " + pct + " | " +
                std::to_string(p.scorer_calls) + " |\n";
      }
    }
    write_file(out_dir / "aggregate.md", body);
  }
}

// ---------------------------------------------------------------------------
// Cluster analysis
// ---------------------------------------------------------------------------

namespace {

Histogram make_histogram(const std::vector<double>& values, std::size_t bins) {
  Histogram h;
  h.counts.assign(bins, 0);
  for (double v : values) {
    double clamped = std::min(std::max(v, h.lo), h.hi);
    std::size_t bin = std::min(bins - 1, static_cast<std::size_t>(clamped * double(bins)));
    h.counts[bin]++;
  }
  return h;
}

}  // namespace

ClusterAnalysis cluster_analysis(std::span<const ProblemRecord> records) {
  ClusterAnalysis analysis;
  std::vector<double> fractions;
  std::vector<double> ratios;
  std::size_t max_clusters = 0;

  struct Prepared {
    ClusterSet clusters;
    AnswerExpr truth;
  };
  std::vector<Prepared> prepared;
  prepared.reserve(records.size());

  for (const auto& record : records) {
    if (record.candidates.empty()) continue;
    Prepared p;
    p.truth = parse_answer(record.problem.ground_truth);
    p.clusters = cluster_by_answer(record.candidates, record.problem.id);
    max_clusters = std::max(max_clusters, p.clusters.clusters.size());

    std::size_t correct = 0;
    for (const auto& c : record.candidates) {
      if (grade_equivalent(p.truth, c.answer)) ++correct;
    }
    double fraction = double(correct) / double(record.candidates.size());
    analysis.correct_fraction.emplace_back(record.problem.id, fraction);
    fractions.push_back(fraction);

    bool maj1_hit = grade_equivalent(p.truth, p.clusters.clusters.front().representative);
    if (!maj1_hit) {
      const AnswerCluster* correct_cluster = nullptr;
      for (const auto& cluster : p.clusters.clusters) {
        if (grade_equivalent(p.truth, cluster.representative)) {
          correct_cluster = &cluster;
          break;
        }
      }
      if (correct_cluster) {
        double ratio = double(correct_cluster->frequency()) /
                       double(p.clusters.clusters.front().frequency());
        analysis.wrong_maj1_ratio.emplace_back(record.problem.id, ratio);
        ratios.push_back(ratio);
      }
    }
    prepared.push_back(std::move(p));
  }

  analysis.correct_fraction_hist = make_histogram(fractions, 10);
  analysis.wrong_maj1_ratio_hist = make_histogram(ratios, 10);

  for (std::size_t k = 1; k <= std::max<std::size_t>(max_clusters, 1); ++k) {
    std::size_t hits = 0;
    for (const auto& p : prepared) {
      if (majk_at_n(p.clusters, p.truth, static_cast<int>(k))) ++hits;
    }
    double acc = prepared.empty() ? 0.0 : double(hits) / double(prepared.size());
    analysis.majk_curve.emplace_back(static_cast<int>(k), acc);
  }
  return analysis;
}

void write_analysis(const ClusterAnalysis& analysis, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  auto write_values = [&](const std::filesystem::path& file, const char* value_name,
                          const std::vector<std::pair<std::string, double>>& values) {
    std::string body = std::string("problem_id,") + value_name + "\n";
    for (const auto& [id, v] : values) body += id + "," + fmt(v) + "\n";
    write_file(file, body);
  };
  auto write_hist = [&](const std::filesystem::path& file, const Histogram& h) {
    std::string body = "bin_lo,bin_hi,count\n";
    double width = (h.hi - h.lo) / double(h.counts.size());
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      body += fmt(h.lo + width * double(i)) + "," + fmt(h.lo + width * double(i + 1)) + "," +
              std::to_string(h.counts[i]) + "\n";
    }
    write_file(file, body);
  };

  write_values(out_dir / "analysis_correct_fraction.csv", "correct_fraction",
               analysis.correct_fraction);
  write_hist(out_dir / "analysis_correct_fraction_hist.csv", analysis.correct_fraction_hist);
  write_values(out_dir / "analysis_cluster_ratio.csv", "correct_over_top1",
               analysis.wrong_maj1_ratio);
  write_hist(out_dir / "analysis_cluster_ratio_hist.csv", analysis.wrong_maj1_ratio_hist);

  std::string body = "k,accuracy\n";
  for (const auto& [k, acc] : analysis.majk_curve) {
    body += std::to_string(k) + "," + fmt(acc) + "\n";
  }
  write_file(out_dir / "analysis_majk_curve.csv", body);
}

}  // namespace mathsel
