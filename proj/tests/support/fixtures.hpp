// Shared test fixtures: an answer-pair corpus with known equivalence, random
// candidate generators, and synthetic problem sets with controlled cluster
// structure.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "mathsel/pipeline.hpp"

namespace testsupport {

// ---------------------------------------------------------------------------
// Answer-pair corpus
// ---------------------------------------------------------------------------

struct AnswerGroup {
  std::vector<std::string> forms;  // mutually equivalent renderings
  bool exact;                      // every form parses to an exact rational/symbolic value
};

// Groups are pairwise non-equivalent; forms within a group are equivalent.
inline const std::vector<AnswerGroup>& answer_groups() {
  static const std::vector<AnswerGroup> groups = {
      {{"40,\\!000", "40000", "40,000", "$40000$", "40000.", " 40000 ", "\\boxed{40000}",
        "4\\cdot 10^4"},
       true},
      {{"320,000", "320000", "2^9\\cdot 5^4", "512*625", "3.2\\cdot 10^5"}, true},
      {{"1/2", "0.5", "\\frac{1}{2}", "2^{-1}", "\\frac{2}{4}", "4/8", "0.50", "$\\frac{1}{2}$"},
       true},
      {{"-3", "-3.0", "\\frac{-6}{2}", "-\\frac{6}{2}", "3-6"}, true},
      {{"2/3", "\\frac{2}{3}", "\\frac{4}{6}", "\\dfrac{2}{3}"}, true},
      {{"0", "0.0", "-0", "\\frac{0}{5}"}, true},
      {{"1", "1.0", "\\frac{3}{3}", "5^0"}, true},
      {{"7", "7.0", "\\sqrt{49}", "14/2"}, true},
      {{"100", "10^2", "10\\cdot 10"}, true},
      {{"3/4", "0.75", "\\frac{3}{4}", "75/100"}, true},
      {{"-1/4", "-0.25", "\\frac{-1}{4}", "-(1/4)"}, true},
      {{"1/3", "\\frac{1}{3}", "\\frac{2}{6}"}, true},
      {{"0.3333333333"}, true},  // close to 1/3 but distinct under exact grading
      {{"x+1", "1+x", "$x+1$", "(x+1)"}, true},
      {{"2x", "2*x", "x*2", "2 x", "x\\cdot 2"}, true},
      {{"x/2", "0.5x", "\\frac{x}{2}", "x*2^{-1}"}, true},
      {{"\\sqrt{2}", "2^{1/2}", "2^{0.5}", "\\sqrt2", "1.4142135624"}, false},
      {{"2\\pi", "2*pi", "\\pi+\\pi", "6.283185307179586"}, false},
      {{"10^100", "10^{100}"}, false},
      {{"123456789012345678901", "123456789012345678901.0"}, false},
      {{"(1,2)", "(1, 2)", "( 1, 2 )"}, false},
      {{"yes", "Yes", "YES", "yes."}, false},
  };
  return groups;
}

struct AnswerPair {
  std::string lhs;
  std::string rhs;
  bool equivalent;
};

// Every within-group pair plus deterministic cross-group pairs; well over the
// two hundred entries the grader suites sweep.
inline std::vector<AnswerPair> answer_pair_corpus() {
  const auto& groups = answer_groups();
  std::vector<AnswerPair> pairs;
  for (const auto& group : groups) {
    for (std::size_t i = 0; i < group.forms.size(); ++i) {
      for (std::size_t j = i + 1; j < group.forms.size(); ++j) {
        pairs.push_back({group.forms[i], group.forms[j], true});
      }
    }
  }
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (std::size_t gj = gi + 1; gj < groups.size(); ++gj) {
      pairs.push_back({groups[gi].forms.front(), groups[gj].forms.front(), false});
      pairs.push_back({groups[gi].forms.back(), groups[gj].forms.front(), false});
    }
  }
  return pairs;
}

// Formatting variants that must never change a grading outcome.
inline std::vector<std::string> formatting_variants(const std::string& answer) {
  std::vector<std::string> out;
  out.push_back("$" + answer + "$");
  out.push_back(" " + answer + " ");
  out.push_back(answer + ".");
  bool pure_int = !answer.empty() && answer.size() >= 4;
  for (std::size_t i = 0; i < answer.size() && pure_int; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(answer[i]))) pure_int = false;
  }
  if (pure_int) {
    std::string grouped;
    std::size_t lead = answer.size() % 3 == 0 ? 3 : answer.size() % 3;
    grouped = answer.substr(0, lead);
    for (std::size_t i = lead; i < answer.size(); i += 3) {
      grouped += "," + answer.substr(i, 3);
    }
    out.push_back(grouped);
    std::string thin = grouped;
    std::size_t pos = 0;
    while ((pos = thin.find(',', pos)) != std::string::npos) {
      thin.insert(pos + 1, "\\!");
      pos += 3;
    }
    out.push_back(thin);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random candidate sets (small exact answers in assorted renderings)
// ---------------------------------------------------------------------------

inline std::string render_value(std::mt19937_64& rng, long long num, long long den) {
  std::uniform_int_distribution<int> style_dist(0, 4);
  int style = style_dist(rng);
  if (den == 1) {
    std::string v = std::to_string(num);
    switch (style) {
      case 0:
        return v;
      case 1:
        return "$" + v + "$";
      case 2:
        return v + ".0";
      case 3:
        return "\\boxed{" + v + "}";
      default:
        return " " + v + " ";
    }
  }
  std::string n = std::to_string(num), d = std::to_string(den);
  switch (style) {
    case 0:
      return n + "/" + d;
    case 1:
      return "\\frac{" + n + "}{" + d + "}";
    case 2:
      return "$" + n + "/" + d + "$";
    case 3:
      return "\\dfrac{" + n + "}{" + d + "}";
    default:
      return "(" + n + ")/(" + d + ")";
  }
}

// Candidates over a small exact value universe; a few empty answers are mixed
// in to exercise the no-answer path.
inline std::vector<mathsel::CandidateSolution> random_candidates(std::mt19937_64& rng, int count,
                                                                 bool with_no_answer = true) {
  std::uniform_int_distribution<long long> num_dist(-20, 20);
  std::uniform_int_distribution<long long> den_dist(1, 6);
  std::uniform_int_distribution<int> no_answer_dist(0, 19);

  std::vector<mathsel::CandidateSolution> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    mathsel::CandidateSolution c;
    c.index = i;
    if (with_no_answer && no_answer_dist(rng) == 0) {
      c.solution_text = "";
      c.answer = mathsel::parse_answer(std::string_view(""));
    } else {
      long long num = num_dist(rng);
      long long den = den_dist(rng);
      auto r = mathsel::make_rational(num, den).value_or(mathsel::Rational{0, 1});
      c.solution_text = render_value(rng, r.num, r.den);
      c.answer = mathsel::parse_answer(c.solution_text);
    }
    out.push_back(std::move(c));
  }
  return out;
}

inline void attach_uniform_scores(std::vector<mathsel::CandidateSolution>& candidates,
                                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.001, 0.999);
  for (auto& c : candidates) c.score = unit(rng);
}

// ---------------------------------------------------------------------------
// Synthetic problem sets
// ---------------------------------------------------------------------------

struct SyntheticOptions {
  int distractor_pool = 14;      // distinct wrong answers per problem
  double min_correct = 0.05;     // per-problem correct-candidate rate range
  double max_correct = 0.8;
  bool varied_formats = true;    // exercise boxed / delimiter / last-line styles
};

inline std::string solution_text_for(std::mt19937_64& rng, long long value, bool varied) {
  std::string v = std::to_string(value);
  if (!varied) return "The answer is $\\boxed{" + v + "}$.";
  std::uniform_int_distribution<int> style_dist(0, 3);
  switch (style_dist(rng)) {
    case 0:
      return "After simplifying, the answer is $\\boxed{" + v + "}$.";
    case 1:
      return "Let me work through this.\n\n# Answer\n\n" + v;
    case 2:
      return "We conclude the result below.\n" + v;
    default:
      return "So we get $2\\cdot " + std::to_string(value) + "/2=\\boxed{" + v + "}$.";
  }
}

// Problems with one true answer, a skewed distractor distribution and a
// random per-problem correct rate; cluster counts routinely exceed eight so
// top-cluster restrictions actually bite.
inline std::vector<mathsel::ProblemRecord> synthetic_records(int n_problems, int n_candidates,
                                                             std::uint64_t seed,
                                                             SyntheticOptions options = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rate_dist(options.min_correct, options.max_correct);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<mathsel::ProblemRecord> records;
  records.reserve(static_cast<std::size_t>(n_problems));
  for (int p = 0; p < n_problems; ++p) {
    mathsel::ProblemRecord record;
    long long truth = 100 + static_cast<long long>(rng() % 900);
    record.problem.id = "p" + std::to_string(100000 + p);
    record.problem.statement = "Synthetic problem " + std::to_string(p);
    record.problem.ground_truth =
        mathsel::RawAnswer{std::to_string(truth), mathsel::ExtractionRule::Explicit, false, false};

    std::vector<long long> distractors;
    for (int d = 1; distractors.size() < static_cast<std::size_t>(options.distractor_pool); ++d) {
      long long v = truth + ((d % 2 == 0) ? d : -d) * 7 + d;
      if (v != truth) distractors.push_back(v);
    }
    std::vector<double> weights;
    for (std::size_t d = 0; d < distractors.size(); ++d) {
      weights.push_back(1.0 / std::pow(double(d + 1), 1.1));
    }
    std::discrete_distribution<int> pick_distractor(weights.begin(), weights.end());

    double rate = rate_dist(rng);
    for (int i = 0; i < n_candidates; ++i) {
      mathsel::CandidateSolution c;
      c.index = i;
      long long value = unit(rng) < rate ? truth : distractors[pick_distractor(rng)];
      c.solution_text = solution_text_for(rng, value, options.varied_formats);
      c.answer = mathsel::parse_answer(mathsel::extract_answer(c.solution_text));
      record.candidates.push_back(std::move(c));
    }
    records.push_back(std::move(record));
  }
  return records;
}

// ---------------------------------------------------------------------------
// JSONL emission for pipeline-level tests
// ---------------------------------------------------------------------------

inline void write_jsonl_dataset(const std::vector<mathsel::ProblemRecord>& records,
                                const std::filesystem::path& problems_path,
                                const std::filesystem::path& candidates_path) {
  std::ofstream problems(problems_path);
  std::ofstream candidates(candidates_path);
  for (const auto& record : records) {
    nlohmann::ordered_json pj;
    pj["id"] = record.problem.id;
    pj["statement"] = record.problem.statement;
    pj["ground_truth"] = record.problem.ground_truth.text;
    pj["metadata"] = record.problem.metadata;
    problems << pj.dump() << "\n";
    for (const auto& c : record.candidates) {
      nlohmann::ordered_json cj;
      cj["problem_id"] = record.problem.id;
      cj["index"] = c.index;
      cj["solution_text"] = c.solution_text;
      cj["generation_meta"] = c.generation_meta;
      candidates << cj.dump() << "\n";
    }
  }
}

}  // namespace testsupport
