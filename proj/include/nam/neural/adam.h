#pragma once

#include <Eigen/Dense>

namespace nam::neural {

/// Adam with bias-corrected moment estimates.
class Adam {
 public:
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit Adam(Eigen::Index size = 0) { resize(size); }

  void resize(Eigen::Index size) {
    m_ = Eigen::VectorXd::Zero(size);
    v_ = Eigen::VectorXd::Zero(size);
    t_ = 0;
  }

  /// theta -= lr * mhat / (sqrt(vhat) + eps).
  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double lr);

  long steps() const { return t_; }
  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }
  void restore(Eigen::VectorXd m, Eigen::VectorXd v, long t) {
    m_ = std::move(m);
    v_ = std::move(v);
    t_ = t;
  }

 private:
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;
};

}  // namespace nam::neural
