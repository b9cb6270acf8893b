#include "nam/neural/tape.h"

#include "nam/error.h"

namespace nam::neural {

namespace {

using Eigen::VectorXd;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void Tape::reset(const Eigen::VectorXd& theta) {
  theta_ = &theta;
  used_ = 0;
}

Tape::Node& Tape::push(Op op, int a, int b) {
  if (used_ == nodes_.size()) nodes_.emplace_back();
  Node& n = nodes_[used_++];
  n.op = op;
  n.a = a;
  n.b = b;
  n.needs_grad = (a >= 0 && nodes_[a].needs_grad) || (b >= 0 && nodes_[b].needs_grad);
  return n;
}

int Tape::constant(const VectorXd& v) {
  Node& n = push(Op::Constant, -1, -1);
  n.value = v;
  return static_cast<int>(used_ - 1);
}

int Tape::matvec(const Block& w, int x) {
  if (nodes_[x].value.size() != w.cols) {
    throw Error(ErrorCode::ShapeMismatch, "matvec input has " +
                                              std::to_string(nodes_[x].value.size()) +
                                              " entries, expected " + std::to_string(w.cols));
  }
  Node& n = push(Op::MatVec, x, -1);
  n.block = w;
  n.needs_grad = true;
  Eigen::Map<const Eigen::MatrixXd> W(theta_->data() + w.offset, w.rows, w.cols);
  n.value.noalias() = W * nodes_[x].value;
  return static_cast<int>(used_ - 1);
}

int Tape::add(int a, int b) {
  if (nodes_[a].value.size() != nodes_[b].value.size()) {
    throw Error(ErrorCode::ShapeMismatch, "add of vectors with different sizes");
  }
  Node& n = push(Op::Add, a, b);
  n.value = nodes_[a].value + nodes_[b].value;
  return static_cast<int>(used_ - 1);
}

int Tape::add_bias(int a, Eigen::Index offset) {
  Node& n = push(Op::AddBias, a, -1);
  n.block = {offset, nodes_[a].value.size(), 1};
  n.needs_grad = true;
  n.value = nodes_[a].value + theta_->segment(offset, nodes_[a].value.size());
  return static_cast<int>(used_ - 1);
}

int Tape::mask(int a, const VectorXd& m) {
  Node& n = push(Op::Mask, a, -1);
  n.aux = m;
  n.value = nodes_[a].value.cwiseProduct(m);
  return static_cast<int>(used_ - 1);
}

int Tape::cell_memory(int z, int c_prev) {
  const Eigen::Index H = nodes_[c_prev].value.size();
  if (nodes_[z].value.size() != 4 * H) throw Error(ErrorCode::ShapeMismatch, "gate width");
  Node& n = push(Op::CellMemory, z, c_prev);
  const VectorXd& zv = nodes_[z].value;
  n.aux.resize(3 * H);  // i, f, g activations
  for (Eigen::Index k = 0; k < H; ++k) {
    n.aux[k] = sigmoid(zv[k]);
    n.aux[H + k] = sigmoid(zv[H + k]);
    n.aux[2 * H + k] = std::tanh(zv[2 * H + k]);
  }
  n.value.resize(H);
  const VectorXd& cp = nodes_[c_prev].value;
  for (Eigen::Index k = 0; k < H; ++k) {
    n.value[k] = n.aux[H + k] * cp[k] + n.aux[k] * n.aux[2 * H + k];
  }
  return static_cast<int>(used_ - 1);
}

int Tape::cell_output(int z, int c) {
  const Eigen::Index H = nodes_[c].value.size();
  Node& n = push(Op::CellOutput, z, c);
  const VectorXd& zv = nodes_[z].value;
  const VectorXd& cv = nodes_[c].value;
  n.aux.resize(2 * H);  // o, tanh(c)
  n.value.resize(H);
  for (Eigen::Index k = 0; k < H; ++k) {
    n.aux[k] = sigmoid(zv[3 * H + k]);
    n.aux[H + k] = std::tanh(cv[k]);
    n.value[k] = n.aux[k] * n.aux[H + k];
  }
  return static_cast<int>(used_ - 1);
}

int Tape::loss(int logits, int truth, std::span<const int> legal, double lambda,
               bool three_level) {
  Node& n = push(Op::Loss, logits, -1);
  const VectorXd& z = nodes_[logits].value;
  n.aux.resize(z.size());
  softmax({z.data(), static_cast<std::size_t>(z.size())},
          {n.aux.data(), static_cast<std::size_t>(n.aux.size())});
  n.truth = truth;
  n.legal.assign(legal.begin(), legal.end());
  n.lambda = lambda;
  n.three_level = three_level;
  if (three_level) {
    n.report = three_level_loss({n.aux.data(), static_cast<std::size_t>(n.aux.size())}, truth,
                                n.legal, lambda, true);
  } else {
    n.report = {};
    n.report.xe = -std::log(n.aux[truth]);
    n.report.total = n.report.xe;
  }
  n.value.resize(1);
  n.value[0] = n.report.total;
  return static_cast<int>(used_ - 1);
}

void Tape::backward(double loss_weight, VectorXd& grad) {
  for (std::size_t i = 0; i < used_; ++i) nodes_[i].grad.setZero(nodes_[i].value.size());
  for (std::size_t i = 0; i < used_; ++i) {
    if (nodes_[i].op == Op::Loss) nodes_[i].grad[0] = loss_weight;
  }
  for (std::size_t idx = used_; idx-- > 0;) {
    Node& n = nodes_[idx];
    if (!n.needs_grad) continue;
    const VectorXd& g = n.grad;
    switch (n.op) {
      case Op::Constant:
        break;
      case Op::MatVec: {
        Node& x = nodes_[n.a];
        Eigen::Map<Eigen::MatrixXd> dW(grad.data() + n.block.offset, n.block.rows, n.block.cols);
        dW.noalias() += g * x.value.transpose();
        if (x.needs_grad) {
          Eigen::Map<const Eigen::MatrixXd> W(theta_->data() + n.block.offset, n.block.rows,
                                              n.block.cols);
          x.grad.noalias() += W.transpose() * g;
        }
        break;
      }
      case Op::Add:
        if (nodes_[n.a].needs_grad) nodes_[n.a].grad += g;
        if (nodes_[n.b].needs_grad) nodes_[n.b].grad += g;
        break;
      case Op::AddBias:
        grad.segment(n.block.offset, n.block.rows) += g;
        if (nodes_[n.a].needs_grad) nodes_[n.a].grad += g;
        break;
      case Op::Mask:
        if (nodes_[n.a].needs_grad) nodes_[n.a].grad += g.cwiseProduct(n.aux);
        break;
      case Op::CellMemory: {
        Node& z = nodes_[n.a];
        Node& cp = nodes_[n.b];
        const Eigen::Index H = g.size();
        for (Eigen::Index k = 0; k < H; ++k) {
          double i = n.aux[k], f = n.aux[H + k], gg = n.aux[2 * H + k];
          if (z.needs_grad) {
            z.grad[k] += g[k] * gg * i * (1 - i);
            z.grad[H + k] += g[k] * cp.value[k] * f * (1 - f);
            z.grad[2 * H + k] += g[k] * i * (1 - gg * gg);
          }
          if (cp.needs_grad) cp.grad[k] += g[k] * f;
        }
        break;
      }
      case Op::CellOutput: {
        Node& z = nodes_[n.a];
        Node& c = nodes_[n.b];
        const Eigen::Index H = g.size();
        for (Eigen::Index k = 0; k < H; ++k) {
          double o = n.aux[k], tc = n.aux[H + k];
          if (z.needs_grad) z.grad[3 * H + k] += g[k] * tc * o * (1 - o);
          if (c.needs_grad) c.grad[k] += g[k] * o * (1 - tc * tc);
        }
        break;
      }
      case Op::Loss: {
        Node& z = nodes_[n.a];
        add_loss_gradient({n.aux.data(), static_cast<std::size_t>(n.aux.size())}, n.truth,
                          n.legal, n.lambda, n.three_level, g[0],
                          {z.grad.data(), static_cast<std::size_t>(z.grad.size())});
        break;
      }
    }
  }
}

}  // namespace nam::neural
