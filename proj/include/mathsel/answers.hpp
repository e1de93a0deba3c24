// answers.hpp - final-answer extraction, parsing and equivalence grading
//
// A final answer arrives as a raw substring of a model solution (the contents
// of a \boxed{...} marker, the tail after an answer delimiter line, or a bare
// last line). Grading normalizes both sides into a canonical AnswerExpr and
// walks an equivalence ladder:
//
//   1. canonical-form equality (exact rationals, canonicalized symbolic
//      trees, normalized opaque strings),
//   2. absolute-tolerance numeric closeness, used only when at least one
//      side is not an exact rational,
//   3. a re-parse attempt for numeric-vs-opaque pairs.
//
// Parsing is total: input that defeats the small grammar degrades to an
// OpaqueString compared by normalized text. Canonicalization is idempotent
// and every AnswerExpr carries a stable canonical key suitable for
// transitivity-safe clustering.

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mathsel {

// ---------------------------------------------------------------------------
// Exact rational arithmetic (int64 components, overflow-checked)
// ---------------------------------------------------------------------------

struct Rational {
  long long num = 0;
  long long den = 1;  // always > 0, gcd(|num|, den) == 1

  friend bool operator==(const Rational&, const Rational&) = default;
};

// All constructors/operations return nullopt on overflow or division by zero.
std::optional<Rational> make_rational(long long num, long long den);
std::optional<Rational> rat_add(const Rational& a, const Rational& b);
std::optional<Rational> rat_mul(const Rational& a, const Rational& b);
std::optional<Rational> rat_pow(const Rational& base, long long exponent);
// Exact k-th root (k >= 1), defined only when numerator and denominator are
// perfect k-th powers.
std::optional<Rational> rat_root(const Rational& value, long long k);

double rat_value(const Rational& r);
std::string rat_text(const Rational& r);

// Shortest round-trip decimal text without exponent notation; reparses to
// the identical double.
std::string double_text(double v);

// ---------------------------------------------------------------------------
// Symbolic expression trees
// ---------------------------------------------------------------------------

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Number, Variable, Pi, Add, Mul, Pow };

  Kind kind = Kind::Number;
  bool exact = true;      // Number payload: exact rational vs double
  Rational rat{};
  double approx = 0.0;
  char variable = 'x';
  std::vector<ExprPtr> operands;  // Add/Mul: flattened + sorted; Pow: {base, exp}
};

ExprPtr make_number(const Rational& r);
ExprPtr make_number(double v);
ExprPtr make_variable(char name);
ExprPtr make_pi();
ExprPtr make_add(std::vector<ExprPtr> operands);
ExprPtr make_mul(std::vector<ExprPtr> operands);
ExprPtr make_pow(ExprPtr base, ExprPtr exponent);

// Flattens nested sums/products, folds constants with exact arithmetic where
// possible, drops identity elements and sorts commutative operands. Idempotent.
ExprPtr canonicalize(const ExprPtr& e);

// Canonical infix text. Output is accepted by the answer grammar and reparses
// to the identical canonical tree.
std::string expr_text(const ExprPtr& e);

bool expr_has_variables(const ExprPtr& e);
void collect_variables(const ExprPtr& e, std::set<char>& out);

// Double-precision evaluation; unbound variables evaluate to NaN.
double expr_eval(const ExprPtr& e, const std::map<char, double>& bindings);

// ---------------------------------------------------------------------------
// Answers
// ---------------------------------------------------------------------------

enum class ExtractionRule {
  Explicit,       // supplied directly (ground truth, CLI argument)
  Boxed,          // innermost boxed marker
  DelimiterLine,  // text after the last answer-delimiter line
  LastLine,       // last non-empty line fallback
};

struct RawAnswer {
  std::string text;  // extracted substring, byte-exact
  ExtractionRule rule = ExtractionRule::Explicit;
  bool no_answer = false;       // nothing extractable; grades false vs everything
  bool low_confidence = false;  // last-line fallback was used
};

struct ExtractionConfig {
  std::vector<std::string> boxed_markers = {"\\boxed", "\\fbox"};
  std::vector<std::string> answer_delimiters = {"# Answer"};
};

enum class AnswerKind { Rational, Decimal, SymbolicTree, OpaqueString };

std::string_view answer_kind_name(AnswerKind k);

// A parsed, canonicalized final answer. Construct via parse_answer only.
class AnswerExpr {
 public:
  AnswerExpr() = default;

  AnswerKind kind() const { return kind_; }
  const Rational& rational() const { return rational_; }
  double decimal() const { return decimal_; }
  const ExprPtr& tree() const { return tree_; }
  const std::string& opaque() const { return opaque_; }
  const RawAnswer& source() const { return source_; }

  bool no_answer() const { return source_.no_answer; }
  // Exact means the value is precisely a rational number.
  bool exact() const { return kind_ == AnswerKind::Rational; }
  // Set for rationals, decimals and variable-free symbolic trees with a
  // finite value.
  const std::optional<double>& numeric_value() const { return numeric_; }

  // Canonical reparseable form ("40000", "1/2", "1+x", normalized opaque).
  const std::string& canonical_text() const { return text_; }
  // Kind-prefixed canonical form; equal keys imply mathematical equivalence.
  const std::string& canonical_key() const { return key_; }

  friend bool operator==(const AnswerExpr& a, const AnswerExpr& b) {
    return a.kind_ == b.kind_ && a.key_ == b.key_ &&
           a.source_.no_answer == b.source_.no_answer;
  }

 private:
  friend AnswerExpr parse_answer(const RawAnswer& raw);

  AnswerKind kind_ = AnswerKind::OpaqueString;
  Rational rational_{};
  double decimal_ = 0.0;
  ExprPtr tree_;
  std::string opaque_;
  RawAnswer source_{};
  std::string text_;
  std::string key_;
  std::optional<double> numeric_;
};

// Extraction precedence: boxed marker > answer-delimiter line > last
// non-empty line. Always yields a RawAnswer; an empty extraction comes back
// flagged no_answer.
RawAnswer extract_answer(std::string_view solution_text,
                         const ExtractionConfig& config = {});

// Total: never fails. Strips formatting (dollar signs, thin-space escapes,
// thousands separators, trailing periods), then tries an exact numeric parse,
// then the small symbolic grammar, and finally falls back to a normalized
// opaque string.
AnswerExpr parse_answer(const RawAnswer& raw);
AnswerExpr parse_answer(std::string_view text);

// Absolute tolerance for comparisons involving at least one non-exact side.
inline constexpr double kDecimalTolerance = 1e-9;

// The equivalence ladder described at the top of this header. Pure, symmetric,
// reflexive for any answer that is not flagged no_answer.
bool grade_equivalent(const AnswerExpr& a, const AnswerExpr& b);

}  // namespace mathsel
