#include "nam/neural/adam.h"

#include <cmath>

#include "nam/error.h"

namespace nam::neural {

void Adam::step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double lr) {
  if (grad.size() != theta.size() || m_.size() != theta.size()) {
    throw Error(ErrorCode::ShapeMismatch, "optimizer and parameter sizes differ");
  }
  ++t_;
  m_ = beta1 * m_ + (1 - beta1) * grad;
  v_ = beta2 * v_ + (1 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1 - std::pow(beta2, static_cast<double>(t_));
  theta.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + epsilon);
}

}  // namespace nam::neural
