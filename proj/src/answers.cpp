#include "mathsel/answers.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <numeric>

namespace mathsel {

namespace {

using int128 = __int128;

constexpr long long kInt64Max = 0x7fffffffffffffffLL;

bool fits_int64(int128 v) { return v >= -int128(kInt64Max) && v <= int128(kInt64Max); }

std::optional<Rational> make_rational128(int128 num, int128 den) {
  if (den == 0) return std::nullopt;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  int128 a = num < 0 ? -num : num;
  int128 b = den;
  while (b != 0) {
    int128 t = a % b;
    a = b;
    b = t;
  }
  if (a != 0) {
    num /= a;
    den /= a;
  }
  if (!fits_int64(num) || !fits_int64(den)) return std::nullopt;
  return Rational{static_cast<long long>(num), static_cast<long long>(den)};
}

}  // namespace

std::optional<Rational> make_rational(long long num, long long den) {
  return make_rational128(num, den);
}

std::optional<Rational> rat_add(const Rational& a, const Rational& b) {
  return make_rational128(int128(a.num) * b.den + int128(b.num) * a.den,
                          int128(a.den) * b.den);
}

std::optional<Rational> rat_mul(const Rational& a, const Rational& b) {
  return make_rational128(int128(a.num) * b.num, int128(a.den) * b.den);
}

std::optional<Rational> rat_pow(const Rational& base, long long exponent) {
  if (exponent == 0) return Rational{1, 1};
  if (base.num == 0) {
    if (exponent < 0) return std::nullopt;
    return Rational{0, 1};
  }
  long long e = exponent < 0 ? -exponent : exponent;
  if (e > 512) return std::nullopt;
  Rational acc{1, 1};
  Rational cur = base;
  while (e > 0) {
    if (e & 1) {
      auto next = rat_mul(acc, cur);
      if (!next) return std::nullopt;
      acc = *next;
    }
    e >>= 1;
    if (e > 0) {
      auto sq = rat_mul(cur, cur);
      if (!sq) return std::nullopt;
      cur = *sq;
    }
  }
  if (exponent < 0) return make_rational(acc.den, acc.num);
  return acc;
}

namespace {

// Exact integer k-th root, or nullopt when v is not a perfect k-th power.
std::optional<long long> int_root(long long v, long long k) {
  if (v < 0) {
    if (k % 2 == 0) return std::nullopt;
    auto r = int_root(-v, k);
    if (!r) return std::nullopt;
    return -*r;
  }
  if (v <= 1) return v;
  long long guess = static_cast<long long>(std::llround(std::pow(double(v), 1.0 / double(k))));
  for (long long c = std::max(1LL, guess - 2); c <= guess + 2; ++c) {
    int128 p = 1;
    bool over = false;
    for (long long i = 0; i < k; ++i) {
      p *= c;
      if (p > int128(kInt64Max)) {
        over = true;
        break;
      }
    }
    if (!over && p == int128(v)) return c;
  }
  return std::nullopt;
}

}  // namespace

std::optional<Rational> rat_root(const Rational& value, long long k) {
  if (k < 1) return std::nullopt;
  if (k == 1) return value;
  auto rn = int_root(value.num, k);
  auto rd = int_root(value.den, k);
  if (!rn || !rd) return std::nullopt;
  return make_rational(*rn, *rd);
}

double rat_value(const Rational& r) {
  return static_cast<double>(r.num) / static_cast<double>(r.den);
}

std::string rat_text(const Rational& r) {
  std::string s = std::to_string(r.num);
  if (r.den != 1) {
    s += '/';
    s += std::to_string(r.den);
  }
  return s;
}

std::string double_text(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  auto epos = s.find_first_of("eE");
  if (epos == std::string::npos) return s;

  // Expand exponent notation into a plain decimal string so the result stays
  // inside the answer grammar.
  std::string mant = s.substr(0, epos);
  int exp = std::atoi(s.c_str() + epos + 1);
  bool negative = false;
  if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) {
    negative = mant[0] == '-';
    mant.erase(0, 1);
  }
  std::string digits;
  int point = static_cast<int>(mant.size());
  if (auto dot = mant.find('.'); dot != std::string::npos) {
    point = static_cast<int>(dot);
    mant.erase(dot, 1);
  }
  digits = mant;
  point += exp;  // decimal point position within `digits`

  std::string out;
  if (point <= 0) {
    out = "0.";
    out.append(static_cast<std::size_t>(-point), '0');
    out += digits;
  } else if (point >= static_cast<int>(digits.size())) {
    out = digits;
    out.append(static_cast<std::size_t>(point) - digits.size(), '0');
  } else {
    out = digits.substr(0, static_cast<std::size_t>(point)) + "." +
          digits.substr(static_cast<std::size_t>(point));
  }
  return negative ? "-" + out : out;
}

// ---------------------------------------------------------------------------
// Expression trees
// ---------------------------------------------------------------------------

ExprPtr make_number(const Rational& r) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Number;
  e->exact = true;
  e->rat = r;
  return e;
}

ExprPtr make_number(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Number;
  e->exact = false;
  e->approx = v;
  return e;
}

ExprPtr make_variable(char name) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Variable;
  e->variable = name;
  return e;
}

ExprPtr make_pi() {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Pi;
  return e;
}

ExprPtr make_add(std::vector<ExprPtr> operands) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Add;
  e->operands = std::move(operands);
  return e;
}

ExprPtr make_mul(std::vector<ExprPtr> operands) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Mul;
  e->operands = std::move(operands);
  return e;
}

ExprPtr make_pow(ExprPtr base, ExprPtr exponent) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Pow;
  e->operands = {std::move(base), std::move(exponent)};
  return e;
}

namespace {

bool is_number(const ExprPtr& e) { return e->kind == Expr::Kind::Number; }

bool is_exact_value(const ExprPtr& e, long long num, long long den) {
  return is_number(e) && e->exact && e->rat.num == num && e->rat.den == den;
}

double number_value(const ExprPtr& e) {
  return e->exact ? rat_value(e->rat) : e->approx;
}

// Folds the Number operands of an n-ary sum or product into one constant,
// staying exact until overflow or an inexact operand forces doubles.
struct ConstantFold {
  bool exact = true;
  Rational rat;
  double approx = 0.0;

  explicit ConstantFold(const Rational& identity) : rat(identity) {}

  void combine(const ExprPtr& number, bool multiply) {
    if (exact && number->exact) {
      auto next = multiply ? rat_mul(rat, number->rat) : rat_add(rat, number->rat);
      if (next) {
        rat = *next;
        return;
      }
    }
    if (exact) {
      approx = rat_value(rat);
      exact = false;
    }
    double v = number_value(number);
    approx = multiply ? approx * v : approx + v;
  }

  ExprPtr to_expr() const { return exact ? make_number(rat) : make_number(approx); }
  bool is_identity(const Rational& identity) const {
    return exact ? rat == identity : false;
  }
  bool is_exact_zero() const { return exact && rat.num == 0; }
};

ExprPtr canonicalize_nary(const ExprPtr& e, bool multiply) {
  const Rational identity = multiply ? Rational{1, 1} : Rational{0, 1};
  std::vector<ExprPtr> flat;
  for (const auto& op : e->operands) {
    ExprPtr c = canonicalize(op);
    if (c->kind == e->kind) {
      flat.insert(flat.end(), c->operands.begin(), c->operands.end());
    } else {
      flat.push_back(std::move(c));
    }
  }

  ConstantFold fold(identity);
  std::vector<ExprPtr> rest;
  for (auto& op : flat) {
    if (is_number(op)) {
      fold.combine(op, multiply);
    } else {
      rest.push_back(std::move(op));
    }
  }

  if (multiply && fold.is_exact_zero()) return make_number(Rational{0, 1});
  if (multiply && !fold.exact && fold.approx == 0.0) return make_number(0.0);

  // Keep the folded constant unless it is the identity and other operands remain.
  if (rest.empty() || !fold.is_identity(identity)) rest.push_back(fold.to_expr());

  if (rest.size() == 1) return rest[0];

  std::sort(rest.begin(), rest.end(), [](const ExprPtr& a, const ExprPtr& b) {
    return expr_text(a) < expr_text(b);
  });
  return multiply ? make_mul(std::move(rest)) : make_add(std::move(rest));
}

ExprPtr canonicalize_pow(const ExprPtr& e) {
  ExprPtr base = canonicalize(e->operands[0]);
  ExprPtr exp = canonicalize(e->operands[1]);

  if (is_exact_value(exp, 0, 1)) return make_number(Rational{1, 1});
  if (is_exact_value(exp, 1, 1)) return base;

  if (is_number(base) && is_number(exp)) {
    if (base->exact && exp->exact) {
      if (exp->rat.den == 1) {
        if (auto folded = rat_pow(base->rat, exp->rat.num)) return make_number(*folded);
      } else if (auto root = rat_root(base->rat, exp->rat.den)) {
        if (auto folded = rat_pow(*root, exp->rat.num)) return make_number(*folded);
      }
    } else {
      double v = std::pow(number_value(base), number_value(exp));
      if (std::isfinite(v)) return make_number(v);
    }
  }
  return make_pow(std::move(base), std::move(exp));
}

}  // namespace

ExprPtr canonicalize(const ExprPtr& e) {
  switch (e->kind) {
    case Expr::Kind::Number:
    case Expr::Kind::Variable:
    case Expr::Kind::Pi:
      return e;
    case Expr::Kind::Add:
      return canonicalize_nary(e, /*multiply=*/false);
    case Expr::Kind::Mul:
      return canonicalize_nary(e, /*multiply=*/true);
    case Expr::Kind::Pow:
      return canonicalize_pow(e);
  }
  return e;
}

namespace {

// Atoms that never need parentheses as a Pow base or exponent.
bool is_plain_atom(const ExprPtr& e) {
  switch (e->kind) {
    case Expr::Kind::Variable:
    case Expr::Kind::Pi:
      return true;
    case Expr::Kind::Number:
      if (e->exact) return e->rat.num >= 0 && e->rat.den == 1;
      return e->approx >= 0.0;
    default:
      return false;
  }
}

std::string pow_operand_text(const ExprPtr& e) {
  std::string t = expr_text(e);
  if (is_plain_atom(e)) return t;
  return "(" + t + ")";
}

}  // namespace

std::string expr_text(const ExprPtr& e) {
  switch (e->kind) {
    case Expr::Kind::Number:
      return e->exact ? rat_text(e->rat) : double_text(e->approx);
    case Expr::Kind::Variable:
      return std::string(1, e->variable);
    case Expr::Kind::Pi:
      return "pi";
    case Expr::Kind::Add: {
      std::string out;
      for (std::size_t i = 0; i < e->operands.size(); ++i) {
        if (i) out += '+';
        out += expr_text(e->operands[i]);
      }
      return out;
    }
    case Expr::Kind::Mul: {
      std::string out;
      for (std::size_t i = 0; i < e->operands.size(); ++i) {
        if (i) out += '*';
        const auto& op = e->operands[i];
        if (op->kind == Expr::Kind::Add) {
          out += "(" + expr_text(op) + ")";
        } else {
          out += expr_text(op);
        }
      }
      return out;
    }
    case Expr::Kind::Pow:
      return pow_operand_text(e->operands[0]) + "^" + pow_operand_text(e->operands[1]);
  }
  return {};
}

bool expr_has_variables(const ExprPtr& e) {
  if (e->kind == Expr::Kind::Variable) return true;
  for (const auto& op : e->operands) {
    if (expr_has_variables(op)) return true;
  }
  return false;
}

void collect_variables(const ExprPtr& e, std::set<char>& out) {
  if (e->kind == Expr::Kind::Variable) out.insert(e->variable);
  for (const auto& op : e->operands) collect_variables(op, out);
}

double expr_eval(const ExprPtr& e, const std::map<char, double>& bindings) {
  switch (e->kind) {
    case Expr::Kind::Number:
      return number_value(e);
    case Expr::Kind::Variable: {
      auto it = bindings.find(e->variable);
      return it == bindings.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
    }
    case Expr::Kind::Pi:
      return std::numbers::pi_v<double>;
    case Expr::Kind::Add: {
      double s = 0.0;
      for (const auto& op : e->operands) s += expr_eval(op, bindings);
      return s;
    }
    case Expr::Kind::Mul: {
      double p = 1.0;
      for (const auto& op : e->operands) p *= expr_eval(op, bindings);
      return p;
    }
    case Expr::Kind::Pow:
      return std::pow(expr_eval(e->operands[0], bindings), expr_eval(e->operands[1], bindings));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// Formatting normalization
// ---------------------------------------------------------------------------

namespace {

bool is_space_char(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space_char(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space_char(s.back())) s.remove_suffix(1);
  return s;
}

void erase_all(std::string& s, std::string_view needle) {
  std::size_t pos = 0;
  while ((pos = s.find(needle, pos)) != std::string::npos) s.erase(pos, needle.size());
}

void replace_all(std::string& s, std::string_view needle, std::string_view repl) {
  std::size_t pos = 0;
  while ((pos = s.find(needle, pos)) != std::string::npos) {
    s.replace(pos, needle.size(), repl);
    pos += repl.size();
  }
}

// Removes commas used as thousands separators: a comma directly between a
// digit and exactly three digits ("40,000" but not the pair "(1,2)").
void strip_thousands_separators(std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == ',' && i > 0 && std::isdigit(static_cast<unsigned char>(s[i - 1]))) {
      std::size_t digits = 0;
      while (i + 1 + digits < s.size() &&
             std::isdigit(static_cast<unsigned char>(s[i + 1 + digits]))) {
        ++digits;
      }
      if (digits == 3) continue;
    }
    out += s[i];
  }
  s = std::move(out);
}

// Finds the matching close brace for the '{' at `open`; npos when unbalanced.
std::size_t matching_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '{') ++depth;
    if (s[i] == '}' && --depth == 0) return i;
  }
  return std::string_view::npos;
}

// One normalization sweep: unwrap dollar signs, boxed wrappers and trailing
// punctuation, drop spacing escapes and thousands separators.
std::string strip_formatting_once(std::string_view raw) {
  std::string_view v = trim(raw);
  while (!v.empty() && (v.back() == '.' || v.back() == ',')) {
    v.remove_suffix(1);
    v = trim(v);
  }
  if (v.size() >= 2 && v.front() == '$' && v.back() == '$') {
    v = trim(v.substr(1, v.size() - 2));
  }
  for (std::string_view marker : {"\\boxed{", "\\fbox{"}) {
    if (v.substr(0, marker.size()) == marker) {
      std::size_t close = matching_brace(v, marker.size() - 1);
      if (close == v.size() - 1) {
        v = trim(v.substr(marker.size(), close - marker.size()));
        break;
      }
    }
  }

  std::string s(v);
  erase_all(s, "\\!");
  erase_all(s, "\\,");
  erase_all(s, "\\;");
  erase_all(s, "\\:");
  erase_all(s, "\\ ");
  erase_all(s, "\\left");
  erase_all(s, "\\right");
  replace_all(s, "\\dfrac", "\\frac");
  replace_all(s, "\\tfrac", "\\frac");
  strip_thousands_separators(s);
  return std::string(trim(s));
}

// Iterated to a fixed point: wrappers nest in any order ("$x$.",
// "\boxed{$1$}"), and an erasure can expose another wrapper or splice a new
// escape together, so one sweep is not enough.
std::string strip_formatting(std::string_view raw) {
  std::string s(raw);
  for (int i = 0; i < 8; ++i) {
    std::string next = strip_formatting_once(s);
    if (next == s) break;
    s = std::move(next);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Numeric literal parsing
// ---------------------------------------------------------------------------

struct NumberParts {
  bool negative = false;
  std::string digits;  // integer + fraction digits, no separator
  int scale = 0;       // value = digits * 10^scale (sign applied)
};

// Accepts [+-]? digits [. digits] [eE [+-] digits] with at least one digit.
std::optional<NumberParts> split_plain_number(std::string_view s) {
  NumberParts parts;
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
    parts.negative = s[i] == '-';
    ++i;
  }
  std::size_t int_digits = 0, frac_digits = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    parts.digits += s[i];
    ++i;
    ++int_digits;
  }
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      parts.digits += s[i];
      ++i;
      ++frac_digits;
    }
  }
  if (int_digits + frac_digits == 0) return std::nullopt;
  int exp = 0;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    bool exp_neg = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
      exp_neg = s[i] == '-';
      ++i;
    }
    std::size_t exp_digits = 0;
    long long acc = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      acc = std::min<long long>(acc * 10 + (s[i] - '0'), 100000);
      ++i;
      ++exp_digits;
    }
    if (exp_digits == 0) return std::nullopt;
    exp = static_cast<int>(exp_neg ? -acc : acc);
  }
  if (i != s.size()) return std::nullopt;
  parts.scale = exp - static_cast<int>(frac_digits);
  return parts;
}

// Exact rational from decimal parts when it fits in int64, otherwise nullopt.
std::optional<Rational> exact_from_parts(const NumberParts& parts) {
  std::string_view digits = parts.digits;
  while (digits.size() > 1 && digits.front() == '0') digits.remove_prefix(1);
  if (digits.size() > 18) return std::nullopt;
  long long n = 0;
  for (char c : digits) n = n * 10 + (c - '0');
  if (parts.negative) n = -n;
  int scale = parts.scale;
  if (scale > 18 || scale < -18) {
    if (n != 0) return std::nullopt;
    scale = 0;
  }
  int128 num = n, den = 1;
  for (int i = 0; i < scale; ++i) num *= 10;
  for (int i = 0; i < -scale; ++i) den *= 10;
  return make_rational128(num, den);
}

ExprPtr number_expr(const NumberParts& parts, std::string_view original) {
  if (auto exact = exact_from_parts(parts)) return make_number(*exact);
  return make_number(std::strtod(std::string(original).c_str(), nullptr));
}

// ---------------------------------------------------------------------------
// The small answer grammar
// ---------------------------------------------------------------------------
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/'|\cdot|\times|\div| implicit) factor)*
//   factor := ('-'|'+')* power
//   power  := atom ('^' factor)?
//   atom   := number | variable | pi | '(' expr ')' | '{' expr '}'
//           | \frac arg arg | \sqrt ['[' expr ']'] arg
//
// Implicit multiplication binds a factor to a following letter, pi, \frac,
// \sqrt, '(' or '{' (never to a bare number, so "40 000" is not a product).
// Words of three or more letters are rejected rather than read as products
// of single-letter variables.

struct ParseFail {};

class AnswerGrammar {
 public:
  explicit AnswerGrammar(std::string_view s) : s_(s) {}

  ExprPtr parse() {
    ExprPtr e = parse_expr();
    skip_spaces();
    if (pos_ != s_.size()) throw ParseFail{};
    return e;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;

  void skip_spaces() {
    while (pos_ < s_.size() && is_space_char(s_[pos_])) ++pos_;
  }

  char peek() {
    skip_spaces();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  bool match(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  // Command name after a backslash, without consuming input.
  std::string peek_command() const {
    if (pos_ >= s_.size() || s_[pos_] != '\\') return {};
    std::string name;
    for (std::size_t i = pos_ + 1; i < s_.size() && std::isalpha(static_cast<unsigned char>(s_[i])); ++i) {
      name += s_[i];
    }
    return name;
  }

  bool match_command(std::string_view name) {
    skip_spaces();
    if (peek_command() == name) {
      pos_ += 1 + name.size();
      return true;
    }
    return false;
  }

  std::size_t letter_run_length() const {
    std::size_t n = 0;
    while (pos_ + n < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_ + n]))) ++n;
    return n;
  }

  bool starts_implicit_operand() {
    char c = peek();
    if (c == '(' || c == '{') return true;
    if (std::isalpha(static_cast<unsigned char>(c))) return true;
    if (c == '\\') {
      std::string cmd = peek_command();
      return cmd == "frac" || cmd == "sqrt" || cmd == "pi";
    }
    return false;
  }

  ExprPtr parse_expr() {
    std::vector<ExprPtr> terms{parse_term()};
    for (;;) {
      char c = peek();
      if (c == '+') {
        ++pos_;
        terms.push_back(parse_term());
      } else if (c == '-') {
        ++pos_;
        terms.push_back(make_mul({make_number(Rational{-1, 1}), parse_term()}));
      } else {
        break;
      }
    }
    return terms.size() == 1 ? terms[0] : make_add(std::move(terms));
  }

  ExprPtr parse_term() {
    std::vector<ExprPtr> factors{parse_factor()};
    for (;;) {
      skip_spaces();
      char c = peek();
      if (c == '*' || match_command("cdot") || match_command("times")) {
        if (c == '*') ++pos_;
        factors.push_back(parse_factor());
      } else if (c == '/' || match_command("div")) {
        if (c == '/') ++pos_;
        factors.push_back(make_pow(parse_factor(), make_number(Rational{-1, 1})));
      } else if (starts_implicit_operand()) {
        factors.push_back(parse_factor());
      } else {
        break;
      }
    }
    return factors.size() == 1 ? factors[0] : make_mul(std::move(factors));
  }

  ExprPtr parse_factor() {
    bool negative = false;
    for (;;) {
      char c = peek();
      if (c == '-') {
        negative = !negative;
        ++pos_;
      } else if (c == '+') {
        ++pos_;
      } else {
        break;
      }
    }
    ExprPtr p = parse_power();
    if (negative) return make_mul({make_number(Rational{-1, 1}), std::move(p)});
    return p;
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_atom();
    if (peek() == '^') {
      ++pos_;
      return make_pow(std::move(base), parse_factor());
    }
    return base;
  }

  ExprPtr parse_number_atom() {
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
      ++pos_;
    }
    std::string_view token = s_.substr(start, pos_ - start);
    auto parts = split_plain_number(token);
    if (!parts) throw ParseFail{};
    return number_expr(*parts, token);
  }

  // A \frac or \sqrt argument: braced expression, single digit, or a letter.
  ExprPtr parse_command_arg() {
    skip_spaces();
    if (match('{')) {
      ExprPtr e = parse_expr();
      if (!match('}')) throw ParseFail{};
      return e;
    }
    char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ++pos_;
      return make_number(Rational{c - '0', 1});
    }
    return parse_letter_atom();
  }

  ExprPtr parse_letter_atom() {
    skip_spaces();
    std::size_t run = letter_run_length();
    if (run == 0) throw ParseFail{};
    if (run == 2 && s_.substr(pos_, 2) == "pi") {
      pos_ += 2;
      return make_pi();
    }
    if (run > 2) throw ParseFail{};  // word-like input is not a product
    char name = s_[pos_++];
    return make_variable(name);
  }

  ExprPtr parse_atom() {
    skip_spaces();
    char c = peek();
    if (c == '(') {
      ++pos_;
      ExprPtr e = parse_expr();
      if (!match(')')) throw ParseFail{};
      return e;
    }
    if (c == '{') {
      ++pos_;
      ExprPtr e = parse_expr();
      if (!match('}')) throw ParseFail{};
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number_atom();
    if (c == '\\') {
      if (match_command("pi")) return make_pi();
      if (match_command("frac")) {
        ExprPtr num = parse_command_arg();
        ExprPtr den = parse_command_arg();
        return make_mul({std::move(num), make_pow(std::move(den), make_number(Rational{-1, 1}))});
      }
      if (match_command("sqrt")) {
        ExprPtr index = make_number(Rational{2, 1});
        skip_spaces();
        if (match('[')) {
          index = parse_expr();
          if (!match(']')) throw ParseFail{};
        }
        skip_spaces();
        ExprPtr radicand;
        if (peek() == '{') {
          radicand = parse_command_arg();
        } else if (std::isdigit(static_cast<unsigned char>(peek()))) {
          radicand = make_number(Rational{peek() - '0', 1});
          ++pos_;
        } else {
          radicand = parse_letter_atom();
        }
        return make_pow(std::move(radicand),
                        make_pow(std::move(index), make_number(Rational{-1, 1})));
      }
      throw ParseFail{};
    }
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_letter_atom();
    throw ParseFail{};
  }
};

// Trees holding an overflowed (non-finite) constant have no usable value or
// printable canonical form; such input degrades to an opaque string.
bool all_constants_finite(const ExprPtr& e) {
  if (e->kind == Expr::Kind::Number && !e->exact && !std::isfinite(e->approx)) return false;
  for (const auto& op : e->operands) {
    if (!all_constants_finite(op)) return false;
  }
  return true;
}

std::string normalize_opaque(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (is_space_char(c)) continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  while (!out.empty() && (out.back() == '.' || out.back() == ',')) out.pop_back();
  return out;
}

struct ParseAttempt {
  std::optional<ExprPtr> expr;
  std::string normal_text;  // whitespace-free normal form the attempt ended on
};

std::optional<ExprPtr> parse_stripped(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (auto parts = split_plain_number(text)) return number_expr(*parts, text);
  try {
    return AnswerGrammar(text).parse();
  } catch (const ParseFail&) {
  }
  return std::nullopt;
}

ParseAttempt try_parse_expression(const std::string& stripped) {
  std::string squeezed;
  squeezed.reserve(stripped.size());
  for (char c : stripped) {
    if (!is_space_char(c)) squeezed += c;
  }
  if (squeezed == stripped) {
    return {parse_stripped(stripped), stripped};
  }

  if (auto expr = parse_stripped(stripped)) {
    return {std::move(expr), std::move(squeezed)};
  }
  // Retry on the whitespace-free form, re-normalized: dropping spaces can
  // rescue split digit groups ("40 000") or splice a thousands separator
  // back together ("7, 123"). Adjacent bare numbers still never multiply.
  std::string renormalized = strip_formatting(squeezed);
  return {parse_stripped(renormalized), std::move(renormalized)};
}

}  // namespace

std::string_view answer_kind_name(AnswerKind k) {
  switch (k) {
    case AnswerKind::Rational:
      return "rational";
    case AnswerKind::Decimal:
      return "decimal";
    case AnswerKind::SymbolicTree:
      return "symbolic";
    case AnswerKind::OpaqueString:
      return "opaque";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

RawAnswer extract_answer(std::string_view solution_text, const ExtractionConfig& config) {
  // Innermost content of the last boxed marker.
  std::size_t best = std::string_view::npos;
  std::size_t best_len = 0;
  for (const auto& marker : config.boxed_markers) {
    std::string open = marker + "{";
    std::size_t at = solution_text.rfind(open);
    if (at != std::string_view::npos && (best == std::string_view::npos || at > best)) {
      best = at;
      best_len = open.size();
    }
  }
  if (best != std::string_view::npos) {
    std::size_t open_brace = best + best_len - 1;
    std::size_t close = matching_brace(solution_text, open_brace);
    std::string_view content =
        close == std::string_view::npos
            ? solution_text.substr(open_brace + 1)
            : solution_text.substr(open_brace + 1, close - open_brace - 1);
    // Descend while the content itself holds another boxed value.
    for (;;) {
      std::size_t inner = std::string_view::npos;
      std::size_t inner_len = 0;
      for (const auto& marker : config.boxed_markers) {
        std::string open = marker + "{";
        std::size_t at = content.rfind(open);
        if (at != std::string_view::npos && (inner == std::string_view::npos || at > inner)) {
          inner = at;
          inner_len = open.size();
        }
      }
      if (inner == std::string_view::npos) break;
      std::size_t ib = inner + inner_len - 1;
      std::size_t ic = matching_brace(content, ib);
      content = ic == std::string_view::npos ? content.substr(ib + 1)
                                             : content.substr(ib + 1, ic - ib - 1);
    }
    RawAnswer raw{std::string(content), ExtractionRule::Boxed, false, false};
    raw.no_answer = trim(raw.text).empty();
    return raw;
  }

  // Text following the last answer-delimiter line.
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start <= solution_text.size()) {
      std::size_t nl = solution_text.find('\n', start);
      if (nl == std::string_view::npos) {
        lines.push_back(solution_text.substr(start));
        break;
      }
      lines.push_back(solution_text.substr(start, nl - start));
      start = nl + 1;
    }
  }
  std::size_t delim_line = std::string_view::npos;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view t = trim(lines[i]);
    for (const auto& d : config.answer_delimiters) {
      if (t == d) delim_line = i;
    }
  }
  if (delim_line != std::string_view::npos) {
    std::string tail;
    for (std::size_t i = delim_line + 1; i < lines.size(); ++i) {
      if (i > delim_line + 1) tail += '\n';
      tail += lines[i];
    }
    std::string text(trim(tail));
    RawAnswer raw{std::move(text), ExtractionRule::DelimiterLine, false, false};
    raw.no_answer = raw.text.empty();
    return raw;
  }

  // Last non-empty line, flagged low-confidence.
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    std::string_view t = trim(*it);
    if (!t.empty()) {
      return RawAnswer{std::string(t), ExtractionRule::LastLine, false, true};
    }
  }
  return RawAnswer{"", ExtractionRule::LastLine, true, true};
}

// ---------------------------------------------------------------------------
// Parsing and grading
// ---------------------------------------------------------------------------

AnswerExpr parse_answer(const RawAnswer& raw) {
  AnswerExpr out;
  out.source_ = raw;

  std::string stripped = strip_formatting(raw.text);
  if (stripped.empty()) out.source_.no_answer = true;

  ParseAttempt attempt =
      out.source_.no_answer ? ParseAttempt{std::nullopt, stripped} : try_parse_expression(stripped);
  ExprPtr canon;
  if (attempt.expr) {
    canon = canonicalize(*attempt.expr);
    if (!all_constants_finite(canon)) canon = nullptr;
  }

  if (canon) {
    if (canon->kind == Expr::Kind::Number) {
      if (canon->exact) {
        out.kind_ = AnswerKind::Rational;
        out.rational_ = canon->rat;
        out.text_ = rat_text(canon->rat);
        out.numeric_ = rat_value(canon->rat);
      } else {
        out.kind_ = AnswerKind::Decimal;
        out.decimal_ = canon->approx;
        out.text_ = double_text(canon->approx);
        out.numeric_ = canon->approx;
      }
    } else {
      out.kind_ = AnswerKind::SymbolicTree;
      out.tree_ = canon;
      out.text_ = expr_text(canon);
      if (!expr_has_variables(canon)) {
        double v = expr_eval(canon, {});
        if (std::isfinite(v)) out.numeric_ = v;
      }
    }
  } else {
    out.kind_ = AnswerKind::OpaqueString;
    out.opaque_ = normalize_opaque(attempt.normal_text);
    out.text_ = out.opaque_;
    if (out.opaque_.empty()) out.source_.no_answer = true;
  }

  switch (out.kind_) {
    case AnswerKind::Rational:
      out.key_ = "rat:" + out.text_;
      break;
    case AnswerKind::Decimal:
      out.key_ = "dec:" + out.text_;
      break;
    case AnswerKind::SymbolicTree:
      out.key_ = "sym:" + out.text_;
      break;
    case AnswerKind::OpaqueString:
      out.key_ = out.source_.no_answer ? "none:" : "str:" + out.text_;
      break;
  }
  return out;
}

AnswerExpr parse_answer(std::string_view text) {
  return parse_answer(RawAnswer{std::string(text), ExtractionRule::Explicit, false, false});
}

bool grade_equivalent(const AnswerExpr& a, const AnswerExpr& b) {
  if (a.no_answer() || b.no_answer()) return false;

  if (a.canonical_key() == b.canonical_key()) return true;

  const auto& na = a.numeric_value();
  const auto& nb = b.numeric_value();
  if (na && nb) {
    // Two exact rationals that differ are simply unequal; the tolerance only
    // guards values that are not exactly representable.
    if (a.exact() && b.exact()) return false;
    return std::abs(*na - *nb) <= kDecimalTolerance;
  }

  // Numeric vs opaque: retry the opaque side before giving up.
  if (na && b.kind() == AnswerKind::OpaqueString) {
    AnswerExpr reparsed = parse_answer(b.opaque());
    if (reparsed.kind() != AnswerKind::OpaqueString && !reparsed.no_answer()) {
      return grade_equivalent(a, reparsed);
    }
  }
  if (nb && a.kind() == AnswerKind::OpaqueString) {
    AnswerExpr reparsed = parse_answer(a.opaque());
    if (reparsed.kind() != AnswerKind::OpaqueString && !reparsed.no_answer()) {
      return grade_equivalent(reparsed, b);
    }
  }
  return false;
}

}  // namespace mathsel
