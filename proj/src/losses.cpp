#include "mathsel/losses.hpp"

#include <stdexcept>
#include <string>

namespace mathsel {

namespace {

void check_unit_interval(double p, const char* what) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::domain_error(std::string(what) + " must lie in (0, 1], got " + std::to_string(p));
  }
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::domain_error(std::string(what) + " must be finite");
  }
}

}  // namespace

double mle_loss(std::span<const double> token_probs) {
  double loss = 0.0;
  for (double p : token_probs) {
    check_unit_interval(p, "token probability");
    loss -= std::log(p);
  }
  return loss;
}

double cls_margin_loss(double s_correct, double s_incorrect, double margin) {
  check_unit_interval(s_correct, "s_correct");
  check_unit_interval(s_incorrect, "s_incorrect");
  check_finite(margin, "margin");
  if (margin <= 0.0) throw std::domain_error("margin must be > 0");
  return std::max(0.0, std::log(s_incorrect) - std::log(s_correct) + margin);
}

double cls_xent_loss(SolutionLabel label, double p_correct_token, double p_incorrect_token) {
  check_unit_interval(p_correct_token, "p_correct_token");
  check_unit_interval(p_incorrect_token, "p_incorrect_token");
  return label == SolutionLabel::Correct ? -std::log(p_correct_token)
                                         : -std::log(p_incorrect_token);
}

double seq_margin_loss(double p_correct_seq, double p_incorrect_seq, double margin) {
  check_unit_interval(p_correct_seq, "p_correct_seq");
  check_unit_interval(p_incorrect_seq, "p_incorrect_seq");
  check_finite(margin, "margin");
  if (margin <= 0.0) throw std::domain_error("margin must be > 0");
  return std::max(0.0, std::log(p_incorrect_seq) - std::log(p_correct_seq) + margin);
}

double combined_loss(double base_loss, double mle, double alpha) {
  check_finite(base_loss, "base loss");
  check_finite(mle, "mle loss");
  check_finite(alpha, "alpha");
  if (alpha < 0.0) throw std::domain_error("alpha must be >= 0");
  return base_loss + alpha * mle;
}

}  // namespace mathsel
