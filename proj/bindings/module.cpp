// Python bindings for the core operations: answer grading, clustering,
// metrics, evaluator scoring, selection strategies and the loss calculators.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mathsel/losses.hpp"
#include "mathsel/metrics.hpp"
#include "mathsel/reranker.hpp"
#include "mathsel/scorer.hpp"

namespace py = pybind11;
using namespace mathsel;

namespace {

std::vector<CandidateSolution> to_candidates(const std::vector<std::string>& answers) {
  std::vector<CandidateSolution> out;
  out.reserve(answers.size());
  for (std::size_t i = 0; i < answers.size(); ++i) {
    CandidateSolution c;
    c.index = static_cast<int>(i);
    c.solution_text = answers[i];
    c.answer = parse_answer(answers[i]);
    out.push_back(std::move(c));
  }
  return out;
}

RerankStrategy make_strategy(const std::string& kind, std::optional<int> k, std::optional<int> n) {
  auto parsed = strategy_kind_from_name(kind);
  if (!parsed) throw std::invalid_argument("unknown strategy kind '" + kind + "'");
  RerankStrategy s;
  s.kind = *parsed;
  s.k = k;
  s.n = n;
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Math-answer grading, clustering, metrics, re-ranking and loss calculators";

  py::register_exception<ScoringError>(m, "ScoringError");

  py::enum_<AnswerKind>(m, "AnswerKind")
      .value("RATIONAL", AnswerKind::Rational)
      .value("DECIMAL", AnswerKind::Decimal)
      .value("SYMBOLIC", AnswerKind::SymbolicTree)
      .value("OPAQUE", AnswerKind::OpaqueString);

  py::class_<AnswerExpr>(m, "AnswerExpr")
      .def_property_readonly("kind", &AnswerExpr::kind)
      .def_property_readonly("canonical_text", &AnswerExpr::canonical_text)
      .def_property_readonly("canonical_key", &AnswerExpr::canonical_key)
      .def_property_readonly("no_answer", &AnswerExpr::no_answer)
      .def_property_readonly("numeric_value",
                             [](const AnswerExpr& a) { return a.numeric_value(); })
      .def("__repr__", [](const AnswerExpr& a) {
        return "<AnswerExpr " + a.canonical_key() + ">";
      });

  m.def(
      "parse_answer", [](const std::string& text) { return parse_answer(text); },
      py::arg("text"), "Parse a raw final answer into its canonical form.");

  m.def(
      "extract_answer",
      [](const std::string& solution_text) {
        RawAnswer raw = extract_answer(solution_text);
        py::dict d;
        d["text"] = raw.text;
        d["no_answer"] = raw.no_answer;
        d["low_confidence"] = raw.low_confidence;
        switch (raw.rule) {
          case ExtractionRule::Boxed:
            d["rule"] = "boxed";
            break;
          case ExtractionRule::DelimiterLine:
            d["rule"] = "delimiter";
            break;
          case ExtractionRule::LastLine:
            d["rule"] = "last_line";
            break;
          default:
            d["rule"] = "explicit";
            break;
        }
        return d;
      },
      py::arg("solution_text"),
      "Extract the final-answer substring of a solution (boxed marker, answer "
      "delimiter, or last line) together with the rule that fired.");

  m.def(
      "grade", [](const std::string& a, const std::string& b) {
        return grade_equivalent(parse_answer(a), parse_answer(b));
      },
      py::arg("a"), py::arg("b"), "Grade two final answers for mathematical equivalence.");
  m.def(
      "grade_parsed",
      [](const AnswerExpr& a, const AnswerExpr& b) { return grade_equivalent(a, b); },
      py::arg("a"), py::arg("b"));

  m.def(
      "cluster",
      [](const std::vector<std::string>& answers) {
        auto candidates = to_candidates(answers);
        ClusterSet cs = cluster_by_answer(candidates);
        py::list out;
        for (const auto& c : cs.clusters) {
          py::dict d;
          d["key"] = c.canonical_key;
          d["members"] = c.members;
          d["frequency"] = c.frequency();
          out.append(std::move(d));
        }
        return out;
      },
      py::arg("answers"),
      "Cluster answers by equivalence; clusters come back ordered by "
      "(frequency desc, first member asc).");

  m.def(
      "pass_at_n",
      [](const std::vector<std::string>& answers, const std::string& truth) {
        return pass_at_n(to_candidates(answers), parse_answer(truth));
      },
      py::arg("answers"), py::arg("truth"));
  m.def(
      "majk_at_n",
      [](const std::vector<std::string>& answers, const std::string& truth, int k) {
        auto candidates = to_candidates(answers);
        return majk_at_n(cluster_by_answer(candidates), parse_answer(truth), k);
      },
      py::arg("answers"), py::arg("truth"), py::arg("k") = 1);

  m.def(
      "build_prompt",
      [](const std::string& problem, const std::string& solution) {
        Problem p;
        p.statement = problem;
        CandidateSolution c;
        c.solution_text = solution;
        return build_prompt(p, c).text;
      },
      py::arg("problem"), py::arg("solution"),
      "Render the evaluator prompt for a (problem, candidate solution) pair.");

  m.def(
      "s_cls",
      [](double p_correct, double p_incorrect) {
        return s_cls(TokenProbPair{p_correct, p_incorrect});
      },
      py::arg("p_correct"), py::arg("p_incorrect"),
      "Normalized solution score p_correct / (p_correct + p_incorrect).");

  m.def(
      "select",
      [](const std::vector<std::string>& answers, const std::vector<double>& scores,
         const std::string& strategy, std::optional<int> k, std::optional<int> n) {
        auto candidates = to_candidates(answers);
        if (!scores.empty()) {
          if (scores.size() != candidates.size()) {
            throw std::invalid_argument("scores and answers must have the same length");
          }
          for (std::size_t i = 0; i < scores.size(); ++i) candidates[i].score = scores[i];
        }
        ClusterSet cs = cluster_by_answer(candidates);
        Selection sel = select(make_strategy(strategy, k, n), cs, candidates);
        py::dict d;
        d["chosen_index"] = sel.chosen.index;
        d["chosen_key"] = sel.chosen.answer.no_answer()
                              ? "none:#" + std::to_string(sel.chosen.index)
                              : sel.chosen.answer.canonical_key();
        d["scorer_calls"] = sel.scorer_calls;
        d["tie_note"] = sel.tie_note ? py::cast(*sel.tie_note) : py::none();
        return d;
      },
      py::arg("answers"), py::arg("scores") = std::vector<double>{}, py::arg("strategy") = "maj1",
      py::arg("k") = std::nullopt, py::arg("n") = std::nullopt,
      "Apply a selection strategy (rr_all, rr_majk, w_rr, w_rr_majk, maj1, "
      "maj1_topn) to scored answers.");

  m.def("mle_loss",
        [](const std::vector<double>& probs) {
          return mle_loss(std::span<const double>(probs.data(), probs.size()));
        },
        py::arg("token_probs"));
  m.def("cls_margin_loss", &cls_margin_loss, py::arg("s_correct"), py::arg("s_incorrect"),
        py::arg("margin") = kDefaultMargin);
  m.def(
      "cls_xent_loss",
      [](const std::string& label, double p_correct, double p_incorrect) {
        if (label != "correct" && label != "incorrect") {
          throw std::invalid_argument("label must be 'correct' or 'incorrect'");
        }
        return cls_xent_loss(
            label == "correct" ? SolutionLabel::Correct : SolutionLabel::Incorrect, p_correct,
            p_incorrect);
      },
      py::arg("label"), py::arg("p_correct"), py::arg("p_incorrect"));
  m.def("seq_margin_loss", &seq_margin_loss, py::arg("p_correct_seq"), py::arg("p_incorrect_seq"),
        py::arg("margin") = kDefaultMargin);
  m.def("combined_loss", &combined_loss, py::arg("base_loss"), py::arg("mle"), py::arg("alpha"));

  m.attr("DEFAULT_MARGIN") = kDefaultMargin;
  m.attr("DECIMAL_TOLERANCE") = kDecimalTolerance;
  m.attr("__version__") = "0.1.0";
}
