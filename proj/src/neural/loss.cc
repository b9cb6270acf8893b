#include "nam/neural/loss.h"

#include <algorithm>
#include <cmath>

#include "nam/error.h"

namespace nam::neural {

void softmax(std::span<const double> logits, std::span<double> probs) {
  double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - top);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
}

namespace {

double legal_mass(std::span<const double> probs, std::span<const int> legal) {
  double m = 0;
  for (int p : legal) m += probs[p];
  return m;
}

}  // namespace

LossReport three_level_loss(std::span<const double> probs, int truth, std::span<const int> legal,
                            double lambda, bool three_level) {
  if (std::find(legal.begin(), legal.end(), truth) == legal.end()) {
    throw Error(ErrorCode::IllegalTruth,
                "true production " + std::to_string(truth) + " is outside the legal set");
  }
  LossReport r;
  double m = legal_mass(probs, legal);
  r.mass_correct = probs[truth];
  r.mass_legal_incorrect = m - probs[truth];
  r.mass_illegal = std::max(0.0, 1.0 - m);
  r.xe = -std::log(probs[truth]);
  r.constraint = -std::log(std::max(m, kLegalMassFloor));
  r.total = three_level ? r.xe + lambda * r.constraint : r.xe;
  return r;
}

void add_loss_gradient(std::span<const double> probs, int truth, std::span<const int> legal,
                       double lambda, bool three_level, double scale, std::span<double> dlogits) {
  for (std::size_t k = 0; k < probs.size(); ++k) dlogits[k] += scale * probs[k];
  dlogits[truth] -= scale;
  if (!three_level || lambda == 0) return;
  // d/dz_k of -log(m), m = sum_{j in C} p_j:
  //   -(p_k [k in C] - m p_k) / m
  double m = legal_mass(probs, legal);
  double c = scale * lambda / std::max(m, kLegalMassFloor);
  for (std::size_t k = 0; k < probs.size(); ++k) dlogits[k] += c * m * probs[k];
  for (int p : legal) dlogits[p] -= c * probs[p];
}

}  // namespace nam::neural
