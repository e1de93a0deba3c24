// Acceptance suite: every release-gating check in one binary, one pass/fail
// line per criterion. Run with no arguments for the full gate or with a
// criterion number to run one check.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mathsel/losses.hpp"
#include "mathsel/pipeline.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace mathsel;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void note(const std::string& info) {
    if (!detail.empty()) detail += "; ";
    detail += info;
  }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

RerankStrategy strat(StrategyKind kind, std::optional<int> k = std::nullopt,
                     std::optional<int> n = std::nullopt) {
  RerankStrategy s;
  s.kind = kind;
  s.k = k;
  s.n = n;
  return s;
}

// --------------------------------------------------------------------------
// 1. Grader algebra on the answer-pair corpus
// --------------------------------------------------------------------------
Outcome criterion_grader_algebra() {
  auto start = std::chrono::steady_clock::now();
  Outcome out;

  auto pairs = testsupport::answer_pair_corpus();
  if (pairs.size() < 200) out.fail("corpus has only " + std::to_string(pairs.size()) + " pairs");

  std::size_t exact_checked = 0;
  for (const auto& pair : pairs) {
    AnswerExpr a = parse_answer(pair.lhs);
    AnswerExpr b = parse_answer(pair.rhs);

    if (!grade_equivalent(a, a) || !grade_equivalent(b, b)) {
      out.fail("reflexivity broken for '" + pair.lhs + "'");
    }
    bool ab = grade_equivalent(a, b);
    if (ab != grade_equivalent(b, a)) {
      out.fail("symmetry broken for ('" + pair.lhs + "', '" + pair.rhs + "')");
    }
    if (ab != pair.equivalent) {
      out.fail("expected " + std::to_string(pair.equivalent) + " for ('" + pair.lhs + "', '" +
               pair.rhs + "')");
    }
    for (const auto& variant : testsupport::formatting_variants(pair.lhs)) {
      if (grade_equivalent(parse_answer(variant), b) != ab) {
        out.fail("formatting changed the outcome: '" + variant + "' vs '" + pair.rhs + "'");
      }
    }
    auto verdict = testsupport::oracle_grade(a, b);
    if (verdict.exact) {
      ++exact_checked;
      if (verdict.equivalent != ab) {
        out.fail("oracle disagrees on exact pair ('" + pair.lhs + "', '" + pair.rhs + "')");
      }
    }
  }

  double elapsed = seconds_since(start);
  if (elapsed >= 5.0) out.fail("runtime " + fmt1(elapsed) + "s exceeds 5s");
  out.note(std::to_string(pairs.size()) + " pairs, " + std::to_string(exact_checked) +
           " exact-arithmetic, " + fmt1(elapsed) + "s");
  return out;
}

// --------------------------------------------------------------------------
// 2. Clustering equals brute-force union-find on 1000 random sets
// --------------------------------------------------------------------------
Outcome criterion_clustering_oracle() {
  auto start = std::chrono::steady_clock::now();
  Outcome out;

  std::mt19937_64 rng(20240601);
  std::size_t mismatches = 0;
  for (int round = 0; round < 1000; ++round) {
    int count = 4 + static_cast<int>(rng() % 61);  // up to 64 candidates
    auto candidates = testsupport::random_candidates(rng, count);
    ClusterSet cs = cluster_by_answer(candidates);
    if (testsupport::partition_of(cs) != testsupport::union_find_partition(candidates)) {
      ++mismatches;
    }
  }
  if (mismatches > 0) out.fail(std::to_string(mismatches) + " of 1000 partitions differ");

  double elapsed = seconds_since(start);
  if (elapsed >= 30.0) out.fail("runtime " + fmt1(elapsed) + "s exceeds 30s");
  out.note("1000 candidate sets, " + fmt1(elapsed) + "s");
  return out;
}

// --------------------------------------------------------------------------
// 3. Metric identities across every fixture
// --------------------------------------------------------------------------
Outcome criterion_metric_identities() {
  Outcome out;
  std::size_t violations = 0;
  std::size_t problems = 0;

  for (std::uint64_t seed : {101ULL, 202ULL, 303ULL}) {
    auto records = testsupport::synthetic_records(150, 48, seed);
    for (const auto& record : records) {
      ++problems;
      AnswerExpr truth = parse_answer(record.problem.ground_truth);
      ClusterSet cs = cluster_by_answer(record.candidates, record.problem.id);
      bool passn = pass_at_n(record.candidates, truth);
      bool maj1 = majk_at_n(cs, truth, 1);

      bool prev = false;
      for (int k = 1; k <= 16; ++k) {
        bool hit = majk_at_n(cs, truth, k);
        if (k == 1 && hit != maj1) ++violations;
        if (prev && !hit) ++violations;          // monotone in k
        if (hit && !passn) ++violations;         // pass@n dominates
        if (k == 1 && hit && !passn) ++violations;
        prev = hit;
      }
      if (maj1 && !passn) ++violations;
    }
  }
  if (violations > 0) out.fail(std::to_string(violations) + " identity violations");
  out.note(std::to_string(problems) + " problems, zero tolerance");
  return out;
}

// --------------------------------------------------------------------------
// 4. Strategy reduction identities on 1000 random scored fixtures
// --------------------------------------------------------------------------
Outcome criterion_strategy_reductions() {
  Outcome out;
  std::mt19937_64 rng(20240602);
  std::size_t failures = 0;

  for (int round = 0; round < 1000; ++round) {
    int count = 6 + static_cast<int>(rng() % 27);
    auto cands = testsupport::random_candidates(rng, count);
    testsupport::attach_uniform_scores(cands, rng);
    ClusterSet cs = cluster_by_answer(cands);

    // W.RR with constant scores picks a maj1-equivalent answer.
    auto constant = cands;
    for (auto& c : constant) c.score = 0.41;
    Selection w = select(strat(StrategyKind::W_RR), cs, constant);
    Selection m = select(strat(StrategyKind::Maj1), cs, constant);
    if (w.chosen.index != m.chosen.index) ++failures;

    // Maj1.TopN with the full pool is maj1 exactly.
    Selection topn =
        select(strat(StrategyKind::Maj1_TopN, std::nullopt, count), cs, cands);
    Selection maj1 = select(strat(StrategyKind::Maj1), cs, cands);
    if (topn.chosen.index != maj1.chosen.index) ++failures;

    // RR.MajK with k=1 grades identically to maj1.
    Selection rr1 = select(strat(StrategyKind::RR_MajK, 1), cs, cands);
    bool same_answer = maj1.chosen.answer.no_answer()
                           ? rr1.chosen.index == maj1.chosen.index
                           : grade_equivalent(rr1.chosen.answer, maj1.chosen.answer);
    if (!same_answer) ++failures;

    // W.RR.MajK with k >= #clusters is w_rr exactly.
    Selection wk = select(
        strat(StrategyKind::W_RR_MajK, static_cast<int>(cs.clusters.size())), cs, cands);
    Selection wfull = select(strat(StrategyKind::W_RR), cs, cands);
    if (wk.chosen.index != wfull.chosen.index) ++failures;
  }

  if (failures > 0) out.fail(std::to_string(failures) + " reduction failures");
  out.note("1000 scored fixtures, exact comparisons");
  return out;
}

// --------------------------------------------------------------------------
// 5. Perfect-scorer dominance
// --------------------------------------------------------------------------
Outcome criterion_perfect_scorer() {
  Outcome out;
  std::size_t failures = 0;
  std::size_t problems = 0;

  for (std::uint64_t seed : {11ULL, 22ULL}) {
    auto records = testsupport::synthetic_records(120, 32, seed);
    SyntheticScorer scorer(1.0, seed);
    CostLedger ledger;
    for (const auto& record : records) {
      ++problems;
      AnswerExpr truth = parse_answer(record.problem.ground_truth);
      ClusterSet cs = cluster_by_answer(record.candidates, record.problem.id);
      auto scored = score_candidates(scorer, record.problem, record.candidates, ledger);

      Selection all = select(strat(StrategyKind::RR_All), cs, scored);
      if (grade_equivalent(truth, all.chosen.answer) != pass_at_n(scored, truth)) ++failures;

      for (int k : {1, 2, 4, 8}) {
        Selection sel = select(strat(StrategyKind::RR_MajK, k), cs, scored);
        if (grade_equivalent(truth, sel.chosen.answer) != majk_at_n(cs, truth, k)) ++failures;
      }
    }
  }
  if (failures > 0) out.fail(std::to_string(failures) + " dominance violations");
  out.note(std::to_string(problems) + " problems, k in {1,2,4,8}, exact equality");
  return out;
}

// --------------------------------------------------------------------------
// 6. Qualitative replication of the accuracy/cost trade-off
// --------------------------------------------------------------------------
Outcome criterion_cost_quality_tradeoff() {
  auto start = std::chrono::steady_clock::now();
  Outcome out;

  // (a) restricted re-ranking is strictly cheaper whenever the top-8
  //     clusters do not already cover every candidate.
  std::size_t cost_violations = 0;
  std::size_t restricted_problems = 0;
  for (double rho : {0.6, 0.75, 0.9}) {
    auto records = testsupport::synthetic_records(500, 64, 1000 + std::uint64_t(rho * 100));
    SyntheticScorer scorer(rho, 7);
    CostLedger ledger;
    for (const auto& record : records) {
      ClusterSet cs = cluster_by_answer(record.candidates, record.problem.id);
      auto scored = score_candidates(scorer, record.problem, record.candidates, ledger);
      Selection all = select(strat(StrategyKind::RR_All), cs, scored);
      Selection majk = select(strat(StrategyKind::RR_MajK, 8), cs, scored);
      std::size_t covered = 0;
      for (std::size_t i = 0; i < std::min<std::size_t>(8, cs.clusters.size()); ++i) {
        covered += cs.clusters[i].frequency();
      }
      if (covered < scored.size()) {
        ++restricted_problems;
        if (!(majk.scorer_calls < all.scorer_calls)) ++cost_violations;
      }
    }
  }
  if (cost_violations > 0) {
    out.fail(std::to_string(cost_violations) + " cost violations");
  }
  if (restricted_problems == 0) {
    out.fail("no problem exercised the top-8 restriction");
  }

  // (b) at rho=0.9, restricted re-ranking stays within two points of
  //     majority voting (averaged over 5 seeds).
  double majk_acc_sum = 0.0, maj1_acc_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto records = testsupport::synthetic_records(500, 64, 9000 + seed);
    SyntheticScorer scorer(0.9, seed);
    CostLedger ledger;
    std::size_t majk_correct = 0, maj1_correct = 0;
    for (const auto& record : records) {
      AnswerExpr truth = parse_answer(record.problem.ground_truth);
      ClusterSet cs = cluster_by_answer(record.candidates, record.problem.id);
      auto scored = score_candidates(scorer, record.problem, record.candidates, ledger);
      if (grade_equivalent(truth,
                           select(strat(StrategyKind::RR_MajK, 8), cs, scored).chosen.answer)) {
        ++majk_correct;
      }
      if (grade_equivalent(truth, select(strat(StrategyKind::Maj1), cs, scored).chosen.answer)) {
        ++maj1_correct;
      }
    }
    majk_acc_sum += double(majk_correct) / double(records.size());
    maj1_acc_sum += double(maj1_correct) / double(records.size());
  }
  double majk_acc = majk_acc_sum / 5.0, maj1_acc = maj1_acc_sum / 5.0;
  if (majk_acc < maj1_acc - 0.02) {
    out.fail("rr_majk " + fmt3(majk_acc) + " fell more than 2 points below maj1 " +
             fmt3(maj1_acc));
  }

  double elapsed = seconds_since(start);
  if (elapsed >= 120.0) out.fail("runtime " + fmt1(elapsed) + "s exceeds 2min");
  out.note("rr_majk " + fmt3(majk_acc) + " vs maj1 " + fmt3(maj1_acc) + " at rho=0.9, " +
           std::to_string(restricted_problems) + " restricted problems, " + fmt1(elapsed) + "s");
  return out;
}

// --------------------------------------------------------------------------
// 7. Loss calculators against direct formula evaluation
// --------------------------------------------------------------------------
Outcome criterion_loss_calculators() {
  Outcome out;
  std::mt19937_64 rng(20240603);
  std::uniform_real_distribution<double> unit(0.01, 1.0);
  std::uniform_real_distribution<double> weight(0.0, 3.0);

  auto close = [](double got, double want) {
    double scale = std::max({std::abs(got), std::abs(want), 1e-300});
    return got == want || std::abs(got - want) / scale <= 1e-12;
  };

  for (int round = 0; round < 100; ++round) {
    std::vector<double> probs;
    double sum_logs = 0.0;
    int len = 1 + int(rng() % 12);
    for (int i = 0; i < len; ++i) {
      probs.push_back(unit(rng));
      sum_logs += std::log(probs.back());
    }
    if (!close(mle_loss(probs), -sum_logs)) out.fail("mle mismatch");

    double sc = unit(rng), si = unit(rng), margin = 0.05 + unit(rng);
    if (!close(cls_margin_loss(sc, si, margin),
               std::max(0.0, std::log(si) - std::log(sc) + margin))) {
      out.fail("cls-margin mismatch");
    }
    if (!close(seq_margin_loss(sc, si, margin),
               std::max(0.0, std::log(si) - std::log(sc) + margin))) {
      out.fail("seq-margin mismatch");
    }
    if (!close(cls_xent_loss(SolutionLabel::Correct, sc, si), -std::log(sc))) {
      out.fail("cls-xent correct mismatch");
    }
    if (!close(cls_xent_loss(SolutionLabel::Incorrect, sc, si), -std::log(si))) {
      out.fail("cls-xent incorrect mismatch");
    }
    double base = unit(rng), mle = unit(rng), alpha = weight(rng);
    if (!close(combined_loss(base, mle, alpha), base + alpha * mle)) {
      out.fail("combined mismatch");
    }

    // The three weighted combinations, evaluated as compositions.
    double nll = mle_loss(probs);
    double seq = seq_margin_loss(sc, si, margin);
    if (!close(combined_loss(seq, nll, alpha), seq + alpha * nll)) {
      out.fail("sequence+nll combination mismatch");
    }
    double margin_part = cls_margin_loss(sc, si, margin);
    if (!close(combined_loss(margin_part, nll, alpha), margin_part + alpha * nll)) {
      out.fail("margin+nll combination mismatch");
    }
    double xent_part = cls_xent_loss(SolutionLabel::Correct, sc, si);
    if (!close(combined_loss(xent_part, nll, alpha), xent_part + alpha * nll)) {
      out.fail("xent+nll combination mismatch");
    }
  }

  // Documented zero points, hit exactly.
  std::vector<double> certain = {1.0, 1.0, 1.0};
  if (mle_loss(certain) != 0.0) out.fail("mle zero point missed");
  if (cls_margin_loss(0.8, 0.2) != 0.0) out.fail("margin zero point missed");
  if (cls_margin_loss(0.8, 0.4) != 0.0) out.fail("margin boundary missed");
  if (cls_xent_loss(SolutionLabel::Correct, 1.0, 0.5) != 0.0) out.fail("xent zero point missed");
  if (seq_margin_loss(0.9, 0.2) != 0.0) out.fail("seq zero point missed");
  if (combined_loss(0.0, 5.0, 0.0) != 0.0) out.fail("combined zero point missed");

  // Finite-difference slopes match the analytic directions.
  auto fd = [](const std::function<double(double)>& f, double x) {
    const double h = 1e-6;
    return (f(x + h) - f(x - h)) / (2.0 * h);
  };
  for (double sc : {0.2, 0.5}) {
    double slope = fd([&](double x) { return cls_margin_loss(x, 0.7); }, sc);
    if (!(slope < 0.0) || std::abs(slope + 1.0 / sc) / (1.0 / sc) > 1e-4) {
      out.fail("margin slope wrt s_correct off at " + fmt3(sc));
    }
  }
  for (double si : {0.3, 0.6}) {
    double slope = fd([&](double x) { return cls_margin_loss(0.1, x); }, si);
    if (!(slope > 0.0) || std::abs(slope - 1.0 / si) / (1.0 / si) > 1e-4) {
      out.fail("margin slope wrt s_incorrect off at " + fmt3(si));
    }
  }
  for (double p : {0.25, 0.75}) {
    double slope = fd(
        [&](double x) {
          std::vector<double> probs = {x};
          return mle_loss(probs);
        },
        p);
    if (!(slope < 0.0) || std::abs(slope + 1.0 / p) / (1.0 / p) > 1e-4) {
      out.fail("mle slope off at " + fmt3(p));
    }
  }

  out.note("100 random inputs per formula at 1e-12 relative, exact zero points");
  return out;
}

// --------------------------------------------------------------------------
// 8. Pipeline determinism and ledger reconciliation
// --------------------------------------------------------------------------
Outcome criterion_pipeline_determinism() {
  Outcome out;
  fs::path dir = fs::temp_directory_path() / ("mathsel_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);

  auto records = testsupport::synthetic_records(40, 32, 555);
  testsupport::write_jsonl_dataset(records, dir / "p.jsonl", dir / "c.jsonl");
  {
    std::ofstream config(dir / "config.json");
    config << R"({
      "dataset": "p.jsonl",
      "candidates": "c.jsonl",
      "scorer": {"type":"synthetic","rho":0.85},
      "strategies": [{"kind":"maj1"},{"kind":"rr_all"},{"kind":"rr_majk","k":8},
                     {"kind":"w_rr"},{"kind":"w_rr_majk","k":8},{"kind":"maj1_topn","n":16}],
      "majk_values": [1,2,4,8],
      "sweep": {"strategy":{"kind":"rr_majk"},"params":[1,2,4,8]},
      "seed": 777,
      "parallelism": 4
    })";
  }

  RunConfig config = RunConfig::from_file(dir / "config.json");
  EvalReport first = run(config);
  write_report(first, dir / "out1");
  EvalReport second = run(config);
  write_report(second, dir / "out2");

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  for (const char* name :
       {"report.jsonl", "metrics.csv", "aggregate.csv", "ledger.csv", "sweep.csv",
        "aggregate.md"}) {
    std::string a = slurp(dir / "out1" / name);
    if (a.empty()) out.fail(std::string(name) + " is empty");
    if (a != slurp(dir / "out2" / name)) out.fail(std::string(name) + " differs between runs");
  }

  // Ledger reconciliation: selection costs match strategy-context entries,
  // and sweep scoring is accounted separately, once per problem.
  std::size_t row_calls = 0;
  for (const auto& row : first.rows) {
    for (const auto& sel : row.selections) row_calls += sel.scorer_calls;
  }
  std::size_t strategy_entries = 0, sweep_entries = 0;
  for (const auto& entry : first.ledger.entries) {
    if (entry.context.rfind("sweep:", 0) == 0) {
      sweep_entries += entry.calls;
    } else {
      strategy_entries += entry.calls;
    }
  }
  if (strategy_entries != row_calls) {
    out.fail("ledger strategy total " + std::to_string(strategy_entries) + " != row total " +
             std::to_string(row_calls));
  }
  if (sweep_entries != first.rows.size() * 32) {
    out.fail("sweep ledger total " + std::to_string(sweep_entries) + " unexpected");
  }
  if (first.ledger.total() != strategy_entries + sweep_entries) {
    out.fail("ledger entries do not add up");
  }

  fs::remove_all(dir);
  out.note("two runs byte-identical, ledger total " + std::to_string(first.ledger.total()));
  return out;
}

// --------------------------------------------------------------------------
// 9. Score normalization contract
// --------------------------------------------------------------------------
Outcome criterion_score_contract() {
  Outcome out;
  if (s_cls({0.6, 0.2}) != 0.75) out.fail("s_cls(0.6, 0.2) is not exactly 0.75");

  std::mt19937_64 rng(20240604);
  std::uniform_real_distribution<double> unit(1e-9, 1.0);
  std::uniform_real_distribution<double> scale(1e-6, 1e6);
  std::size_t violations = 0;
  for (int i = 0; i < 10000; ++i) {
    double p = unit(rng), q = unit(rng), c = scale(rng);
    double base = s_cls({p, q});
    if (std::abs(base - s_cls({c * p, c * q})) > 1e-12) ++violations;
    if (std::abs(base + s_cls({q, p}) - 1.0) > 1e-12) ++violations;
  }
  if (violations > 0) out.fail(std::to_string(violations) + " contract violations");
  out.note("10000 pairs, scale invariance and complement identity at 1e-12");
  return out;
}

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> fn;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> criteria = {
      {1, "grader algebra", criterion_grader_algebra},
      {2, "clustering vs union-find oracle", criterion_clustering_oracle},
      {3, "metric identities", criterion_metric_identities},
      {4, "strategy reduction identities", criterion_strategy_reductions},
      {5, "perfect-scorer dominance", criterion_perfect_scorer},
      {6, "accuracy/cost trade-off replication", criterion_cost_quality_tradeoff},
      {7, "loss calculators", criterion_loss_calculators},
      {8, "pipeline determinism", criterion_pipeline_determinism},
      {9, "score normalization contract", criterion_score_contract},
  };

  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  int failures = 0;
  for (const auto& criterion : criteria) {
    if (only != 0 && criterion.id != only) continue;
    Outcome outcome;
    try {
      outcome = criterion.fn();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    std::cout << (outcome.pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion.id << ": "
              << criterion.name;
    if (!outcome.detail.empty()) std::cout << " (" << outcome.detail << ")";
    std::cout << "\n";
    if (!outcome.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
