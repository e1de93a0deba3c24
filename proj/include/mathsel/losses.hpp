// losses.hpp - reference calculators for the training-loss formulas
//
// These operate on caller-supplied probabilities and scores; they exist to
// verify formula values, not to drive any training loop.

#pragma once

#include <cmath>
#include <span>

namespace mathsel {

// Margin that asks for at least twice the score/probability mass on the
// correct side.
inline const double kDefaultMargin = std::log(2.0);

enum class SolutionLabel { Correct, Incorrect };

// Negative log-likelihood of a token sequence: -sum(log p_i).
// Every probability must lie in (0, 1].
double mle_loss(std::span<const double> token_probs);

// max(0, log s_incorrect - log s_correct + margin) over classifier scores
// in (0, 1]. Zero whenever s_correct / s_incorrect >= e^margin.
double cls_margin_loss(double s_correct, double s_incorrect, double margin = kDefaultMargin);

// Cross-entropy of the two-way classification: -log of the true-label token
// probability. Both probabilities must lie in (0, 1].
double cls_xent_loss(SolutionLabel label, double p_correct_token, double p_incorrect_token);

// The margin loss applied to whole-sequence probabilities.
double seq_margin_loss(double p_correct_seq, double p_incorrect_seq,
                       double margin = kDefaultMargin);

// base_loss + alpha * mle. alpha has no default; it must be supplied.
double combined_loss(double base_loss, double mle, double alpha);

}  // namespace mathsel
