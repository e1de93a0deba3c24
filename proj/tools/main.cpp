// mathsel - CLI for grading math answers, clustering sampled solutions,
// running re-ranking experiments and evaluating the loss calculators.

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mathsel/losses.hpp"
#include "mathsel/pipeline.hpp"

namespace {

using mathsel::AnswerExpr;
using ordered_json = nlohmann::ordered_json;

ordered_json answer_json(const AnswerExpr& a) {
  ordered_json j;
  j["kind"] = std::string(mathsel::answer_kind_name(a.kind()));
  j["canonical"] = a.canonical_text();
  j["key"] = a.canonical_key();
  j["no_answer"] = a.no_answer();
  return j;
}

int cmd_grade(const std::string& lhs, const std::string& rhs, bool as_json) {
  AnswerExpr a = mathsel::parse_answer(lhs);
  AnswerExpr b = mathsel::parse_answer(rhs);
  bool equivalent = mathsel::grade_equivalent(a, b);
  if (as_json) {
    ordered_json j;
    j["a"] = answer_json(a);
    j["b"] = answer_json(b);
    j["equivalent"] = equivalent;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "a: " << a.canonical_key() << "\n";
    std::cout << "b: " << b.canonical_key() << "\n";
    std::cout << "equivalent: " << (equivalent ? "true" : "false") << "\n";
  }
  return 0;
}

int cmd_cluster(const std::string& candidates_path, const std::string& problems_path,
                bool strict, const std::string& out_path) {
  // Clustering needs no ground truth; when no problems file is given a stub
  // problem per id keeps ingestion happy.
  std::filesystem::path dataset = problems_path;
  std::filesystem::path tmp;
  if (problems_path.empty()) {
    std::ifstream in(candidates_path);
    if (!in) throw mathsel::IngestError("cannot open file: " + candidates_path);
    std::set<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        ids.insert(nlohmann::json::parse(line).at("problem_id").get<std::string>());
      } catch (const nlohmann::json::exception&) {
        // ingest() reports malformed lines with their line numbers
      }
    }
    tmp = std::filesystem::temp_directory_path() /
          ("mathsel_problems_" + std::to_string(::getpid()) + ".jsonl");
    std::ofstream out(tmp);
    for (const auto& id : ids) {
      ordered_json j;
      j["id"] = id;
      j["statement"] = "";
      j["ground_truth"] = "0";
      out << j.dump() << "\n";
    }
    dataset = tmp;
  }

  auto records = mathsel::ingest(dataset, candidates_path, strict);
  if (!tmp.empty()) std::filesystem::remove(tmp);

  std::ostringstream body;
  for (const auto& record : records) {
    mathsel::ClusterSet cs = mathsel::cluster_by_answer(record.candidates, record.problem.id);
    ordered_json j;
    j["schema_version"] = 1;
    j["problem_id"] = cs.problem_id;
    ordered_json clusters = ordered_json::array();
    for (const auto& c : cs.clusters) {
      ordered_json cj;
      cj["key"] = c.canonical_key;
      cj["frequency"] = c.frequency();
      cj["members"] = c.members;
      clusters.push_back(std::move(cj));
    }
    j["clusters"] = std::move(clusters);
    body << j.dump() << "\n";
  }

  if (out_path.empty() || out_path == "-") {
    std::cout << body.str();
  } else {
    std::filesystem::path out_file(out_path);
    if (out_file.has_parent_path()) std::filesystem::create_directories(out_file.parent_path());
    std::ofstream out(out_file, std::ios::binary);
    out << body.str();
    std::cout << "wrote " << out_file.string() << "\n";
  }
  return 0;
}

int cmd_rerank(const std::string& config_path, std::optional<std::uint64_t> seed,
               std::optional<bool> strict, const std::string& out_dir) {
  mathsel::RunConfig config = mathsel::RunConfig::from_file(config_path);
  if (seed) {
    config.seed = *seed;
    config.scorer.seed.reset();  // the CLI seed wins over the config file
  }
  if (strict) config.strict = *strict;
  if (!out_dir.empty()) config.output_dir = out_dir;

  mathsel::EvalReport report = mathsel::run(config);
  mathsel::write_report(report, config.output_dir);
  if (config.with_analysis) {
    auto records = mathsel::ingest(config.dataset_path, config.candidate_path, config.strict);
    mathsel::write_analysis(mathsel::cluster_analysis(records), config.output_dir);
  }

  std::cout << "evaluated " << report.rows.size() << " problems ("
            << report.exclusions.size() << " excluded), scorer calls: "
            << report.ledger.total() << "\n";
  std::cout << "report written to " << config.output_dir.string() << "\n";
  return 0;
}

int cmd_analyze(const std::string& problems_path, const std::string& candidates_path,
                bool strict, const std::string& out_dir) {
  auto records = mathsel::ingest(problems_path, candidates_path, strict);
  mathsel::ClusterAnalysis analysis = mathsel::cluster_analysis(records);
  mathsel::write_analysis(analysis, out_dir);
  std::cout << "analyzed " << records.size() << " problems; " << analysis.wrong_maj1_ratio.size()
            << " had a recoverable majority-voting miss\n";
  std::cout << "analysis written to " << out_dir << "\n";
  return 0;
}

std::vector<double> parse_prob_list(const std::string& csv) {
  std::vector<double> probs;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) probs.push_back(std::stod(item));
  }
  return probs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"math solution evaluation and re-ranking toolkit"};
  app.require_subcommand(1);

  // grade
  std::string grade_a, grade_b;
  bool grade_json = false;
  auto* grade = app.add_subcommand("grade", "grade two final answers for equivalence");
  grade->add_option("a", grade_a, "first answer")->required();
  grade->add_option("b", grade_b, "second answer")->required();
  grade->add_flag("--json", grade_json, "emit JSON");

  // cluster
  std::string cl_candidates, cl_problems, cl_out;
  bool cl_lenient = false;
  auto* cluster = app.add_subcommand("cluster", "cluster candidates by answer equivalence");
  cluster->add_option("--candidates", cl_candidates, "candidates JSONL")->required();
  cluster->add_option("--problems", cl_problems, "problems JSONL (optional)");
  cluster->add_option("--out", cl_out, "output file ('-' for stdout)");
  cluster->add_flag("--lenient", cl_lenient, "skip malformed records");

  // rerank
  std::string rr_config, rr_out;
  std::uint64_t rr_seed = 0;
  bool rr_strict = false, rr_lenient = false;
  auto* rerank = app.add_subcommand("rerank", "run a full evaluation per config");
  rerank->add_option("--config", rr_config, "run config JSON")->required();
  auto* rr_seed_opt = rerank->add_option("--seed", rr_seed, "override the run seed");
  rerank->add_flag("--strict", rr_strict, "abort on the first bad record or scorer failure");
  rerank->add_flag("--lenient", rr_lenient, "skip bad records, exclude failing problems");
  rerank->add_option("--out", rr_out, "output directory");

  // analyze
  std::string an_problems, an_candidates, an_out = "out";
  bool an_lenient = false;
  auto* analyze = app.add_subcommand("analyze", "cluster statistics and oracle curves");
  analyze->add_option("--problems", an_problems, "problems JSONL")->required();
  analyze->add_option("--candidates", an_candidates, "candidates JSONL")->required();
  analyze->add_option("--out", an_out, "output directory");
  analyze->add_flag("--lenient", an_lenient, "skip malformed records");

  // losses
  auto* losses = app.add_subcommand("losses", "evaluate a loss formula on supplied values");
  losses->require_subcommand(1);

  std::string mle_probs;
  auto* mle = losses->add_subcommand("mle", "-sum(log p_i) over token probabilities");
  mle->add_option("--probs", mle_probs, "comma-separated token probabilities")->required();

  double margin_sc = 0, margin_si = 0, margin_value = mathsel::kDefaultMargin;
  auto* cls_margin = losses->add_subcommand("cls-margin", "pairwise margin loss on scores");
  cls_margin->add_option("--s-correct", margin_sc, "score of the correct solution")->required();
  cls_margin->add_option("--s-incorrect", margin_si, "score of the incorrect solution")->required();
  cls_margin->add_option("--margin", margin_value, "margin (default log 2)");

  std::string xent_label;
  double xent_pc = 0, xent_pi = 0;
  auto* cls_xent = losses->add_subcommand("cls-xent", "classification cross-entropy");
  cls_xent->add_option("--label", xent_label, "correct|incorrect")->required();
  cls_xent->add_option("--p-correct", xent_pc, "probability of the 'correct' token")->required();
  cls_xent->add_option("--p-incorrect", xent_pi, "probability of the 'incorrect' token")->required();

  double seq_pc = 0, seq_pi = 0, seq_margin_value = mathsel::kDefaultMargin;
  auto* seq_margin = losses->add_subcommand("seq-margin", "margin loss on sequence probabilities");
  seq_margin->add_option("--p-correct", seq_pc, "probability of the correct sequence")->required();
  seq_margin->add_option("--p-incorrect", seq_pi, "probability of the incorrect sequence")->required();
  seq_margin->add_option("--margin", seq_margin_value, "margin (default log 2)");

  double comb_base = 0, comb_mle = 0, comb_alpha = 0;
  auto* combined = losses->add_subcommand("combined", "base loss + alpha * mle loss");
  combined->add_option("--base", comb_base, "base loss value")->required();
  combined->add_option("--mle", comb_mle, "mle loss value")->required();
  combined->add_option("--alpha", comb_alpha, "mixing weight (required, no default)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*grade) return cmd_grade(grade_a, grade_b, grade_json);
    if (*cluster) return cmd_cluster(cl_candidates, cl_problems, !cl_lenient, cl_out);
    if (*rerank) {
      if (rr_strict && rr_lenient) {
        std::cerr << "error: --strict and --lenient are mutually exclusive\n";
        return 2;
      }
      std::optional<std::uint64_t> seed;
      if (rr_seed_opt->count() > 0) seed = rr_seed;
      std::optional<bool> strict;
      if (rr_strict) strict = true;
      if (rr_lenient) strict = false;
      return cmd_rerank(rr_config, seed, strict, rr_out);
    }
    if (*analyze) return cmd_analyze(an_problems, an_candidates, !an_lenient, an_out);
    if (*mle) {
      std::cout << mathsel::double_text(mathsel::mle_loss(parse_prob_list(mle_probs))) << "\n";
      return 0;
    }
    if (*cls_margin) {
      std::cout << mathsel::double_text(mathsel::cls_margin_loss(margin_sc, margin_si, margin_value))
                << "\n";
      return 0;
    }
    if (*cls_xent) {
      mathsel::SolutionLabel label;
      if (xent_label == "correct") {
        label = mathsel::SolutionLabel::Correct;
      } else if (xent_label == "incorrect") {
        label = mathsel::SolutionLabel::Incorrect;
      } else {
        std::cerr << "error: --label must be 'correct' or 'incorrect'\n";
        return 2;
      }
      std::cout << mathsel::double_text(mathsel::cls_xent_loss(label, xent_pc, xent_pi)) << "\n";
      return 0;
    }
    if (*seq_margin) {
      std::cout << mathsel::double_text(mathsel::seq_margin_loss(seq_pc, seq_pi, seq_margin_value))
                << "\n";
      return 0;
    }
    if (*combined) {
      std::cout << mathsel::double_text(mathsel::combined_loss(comb_base, comb_mle, comb_alpha))
                << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
