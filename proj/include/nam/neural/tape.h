#pragma once

#include <vector>

#include <Eigen/Dense>

#include "nam/neural/loss.h"

namespace nam::neural {

/// A matrix stored column-major inside the flat parameter vector.
struct Block {
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  Eigen::Index size() const { return rows * cols; }
};

/// Reverse-mode gradient tape over dense vectors. Nodes are recorded in
/// evaluation order; backward() walks them in reverse, accumulating
/// parameter gradients into a vector shaped like the parameters. Storage is
/// kept across reset() so that repeated windows do not reallocate.
class Tape {
 public:
  void reset(const Eigen::VectorXd& theta);

  /// Leaf without gradient (inputs, detached carried state).
  int constant(const Eigen::VectorXd& v);
  /// W x for a parameter block W.
  int matvec(const Block& w, int x);
  int add(int a, int b);
  /// a + bias, bias being `a.size()` parameters starting at `offset`.
  int add_bias(int a, Eigen::Index offset);
  /// Elementwise a * m for a fixed vector m (dropout).
  int mask(int a, const Eigen::VectorXd& m);
  /// LSTM memory update from gate preactivations z = [i f g o] (4H):
  /// c = sigmoid(f) * c_prev + sigmoid(i) * tanh(g).
  int cell_memory(int z, int c_prev);
  /// LSTM output h = sigmoid(o) * tanh(c).
  int cell_output(int z, int c);
  /// Scalar loss of one prediction from logits (softmax inside).
  int loss(int logits, int truth, std::span<const int> legal, double lambda, bool three_level);

  const Eigen::VectorXd& value(int node) const { return nodes_[node].value; }
  const LossReport& report(int loss_node) const { return nodes_[loss_node].report; }
  const Eigen::VectorXd& probabilities(int loss_node) const { return nodes_[loss_node].aux; }
  std::size_t size() const { return used_; }

  /// Seeds every loss node with d(objective)/d(loss) = `loss_weight` and
  /// adds parameter gradients to `grad` (same size as theta).
  void backward(double loss_weight, Eigen::VectorXd& grad);

 private:
  enum class Op { Constant, MatVec, Add, AddBias, Mask, CellMemory, CellOutput, Loss };

  struct Node {
    Op op = Op::Constant;
    int a = -1;
    int b = -1;
    Block block;
    bool needs_grad = false;
    Eigen::VectorXd value;
    Eigen::VectorXd grad;
    Eigen::VectorXd aux;
    int truth = -1;
    std::vector<int> legal;
    double lambda = 0;
    bool three_level = false;
    LossReport report;
  };

  Node& push(Op op, int a, int b);

  const Eigen::VectorXd* theta_ = nullptr;
  std::vector<Node> nodes_;
  std::size_t used_ = 0;
};

}  // namespace nam::neural
