#pragma once

#include <span>
#include <vector>

namespace nam::neural {

inline constexpr double kLegalMassFloor = 1e-300;

/// Softmax of `logits` into `probs` (same length), shifted by the maximum.
void softmax(std::span<const double> logits, std::span<double> probs);

struct LossReport {
  double xe = 0;          // -log p[true]
  double constraint = 0;  // -log(sum of p over P_c)
  double total = 0;       // xe + lambda * constraint, or xe alone
  double mass_correct = 0;
  double mass_legal_incorrect = 0;
  double mass_illegal = 0;  // everything outside P_c
};

/// Three-level loss of one prediction. Throws Error(IllegalTruth) when
/// `truth` is not in `legal`.
LossReport three_level_loss(std::span<const double> probs, int truth, std::span<const int> legal,
                            double lambda, bool three_level);

/// Adds scale * d(total)/d(logits) to `dlogits`, given the softmax output.
void add_loss_gradient(std::span<const double> probs, int truth, std::span<const int> legal,
                       double lambda, bool three_level, double scale, std::span<double> dlogits);

}  // namespace nam::neural
