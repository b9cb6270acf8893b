#include "nam/neural/lstm.h"

#include <cmath>

#include "nam/error.h"

namespace nam::neural {

using Eigen::VectorXd;

LstmModel::LstmModel(const ModelConfig& config) : config_(config) {
  config_.check();
  const Eigen::Index H = config_.hidden;
  Eigen::Index at = 0;
  auto block = [&](Eigen::Index rows, Eigen::Index cols) {
    Block b{at, rows, cols};
    at += rows * cols;
    return b;
  };
  for (int l = 0; l < config_.layers; ++l) {
    Eigen::Index in = l == 0 ? config_.input_width() : H;
    Layer layer;
    layer.w = block(4 * H, in);
    layer.u = block(4 * H, H);
    layer.bias = at;
    at += 4 * H;
    layers_.push_back(layer);
  }
  output_ = block(config_.productions, H);
  output_bias_ = at;
  at += config_.productions;
  count_ = at;
  theta = VectorXd::Zero(count_);
}

void LstmModel::initialize(Rng& rng) {
  theta.setZero();
  auto fill = [&](const Block& b) {
    double limit = std::sqrt(6.0 / static_cast<double>(b.rows + b.cols));
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      theta[b.offset + i] = (2 * rng.uniform() - 1) * limit;
    }
  };
  const Eigen::Index H = config_.hidden;
  for (const auto& l : layers_) {
    fill(l.w);
    fill(l.u);
    theta.segment(l.bias + H, H).setOnes();
  }
  fill(output_);
}

std::vector<Block> LstmModel::weight_blocks() const {
  std::vector<Block> out;
  for (const auto& l : layers_) {
    out.push_back(l.w);
    out.push_back(l.u);
  }
  out.push_back(output_);
  return out;
}

double LstmModel::regularizer() const {
  double r = 0;
  for (const auto& b : weight_blocks()) {
    auto w = theta.segment(b.offset, b.size());
    r += config_.l1 * w.cwiseAbs().sum() + config_.l2 * w.squaredNorm();
  }
  return r;
}

void LstmModel::add_regularizer_gradient(VectorXd& grad) const {
  for (const auto& b : weight_blocks()) {
    auto w = theta.segment(b.offset, b.size());
    grad.segment(b.offset, b.size()).array() +=
        config_.l1 * w.array().sign() + 2 * config_.l2 * w.array();
  }
}

LstmState LstmModel::zero_state() const {
  LstmState s;
  for (int l = 0; l < config_.layers; ++l) {
    s.h.push_back(VectorXd::Zero(config_.hidden));
    s.c.push_back(VectorXd::Zero(config_.hidden));
  }
  return s;
}

void LstmModel::encode(const ModelToken& token, VectorXd& x) const {
  x.setZero(config_.input_width());
  if (token.is_pop()) {
    x[config_.nonterminals] = 1;
  } else {
    if (token.nonterminal >= config_.nonterminals) {
      throw Error(ErrorCode::ShapeMismatch, "nonterminal index outside the input width");
    }
    x[token.nonterminal] = 1;
  }
  if (config_.context > 0) {
    if (!token.context || static_cast<int>(token.context->size()) != config_.context) {
      throw Error(ErrorCode::ShapeMismatch, "context vector width does not match the model");
    }
    for (int i = 0; i < config_.context; ++i) {
      x[config_.nonterminals + 1 + i] = (*token.context)[i];
    }
  }
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void LstmModel::step(const ModelToken& token, LstmState& state, VectorXd* logits) const {
  const Eigen::Index H = config_.hidden;
  VectorXd x;
  encode(token, x);
  VectorXd z(4 * H);
  for (int l = 0; l < config_.layers; ++l) {
    const Layer& L = layers_[l];
    Eigen::Map<const Eigen::MatrixXd> W(theta.data() + L.w.offset, L.w.rows, L.w.cols);
    Eigen::Map<const Eigen::MatrixXd> U(theta.data() + L.u.offset, L.u.rows, L.u.cols);
    const VectorXd& in = l == 0 ? x : state.h[l - 1];
    z.noalias() = W * in;
    z.noalias() += U * state.h[l];
    z += theta.segment(L.bias, 4 * H);
    VectorXd& c = state.c[l];
    VectorXd& h = state.h[l];
    for (Eigen::Index k = 0; k < H; ++k) {
      double i = sigmoid(z[k]), f = sigmoid(z[H + k]), g = std::tanh(z[2 * H + k]);
      double o = sigmoid(z[3 * H + k]);
      c[k] = f * c[k] + i * g;
      h[k] = o * std::tanh(c[k]);
    }
  }
  if (logits) {
    Eigen::Map<const Eigen::MatrixXd> V(theta.data() + output_.offset, output_.rows, output_.cols);
    logits->noalias() = V * state.h.back();
    *logits += theta.segment(output_bias_, output_.rows);
  }
}

std::vector<VectorXd> LstmModel::draw_masks(std::size_t tokens, Rng& rng) const {
  const double keep = config_.keep_prob;
  std::vector<VectorXd> out(tokens * config_.layers, VectorXd(config_.hidden));
  for (auto& m : out) {
    for (Eigen::Index k = 0; k < m.size(); ++k) m[k] = rng.uniform() < keep ? 1.0 / keep : 0.0;
  }
  return out;
}

WindowResult LstmModel::window_gradient(std::span<const ModelToken> tokens, LstmState& state,
                                        const std::vector<VectorXd>* masks, Tape& tape,
                                        VectorXd& grad) const {
  const int layers = config_.layers;
  tape.reset(theta);
  std::vector<int> h(layers), c(layers);
  for (int l = 0; l < layers; ++l) {
    h[l] = tape.constant(state.h[l]);
    c[l] = tape.constant(state.c[l]);
  }
  WindowResult r;
  std::vector<int> losses;
  VectorXd x;
  static const std::vector<int> kNoLegal;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const ModelToken& tok = tokens[t];
    encode(tok, x);
    int in = tape.constant(x);
    for (int l = 0; l < layers; ++l) {
      const Layer& L = layers_[l];
      int z = tape.add_bias(tape.add(tape.matvec(L.w, in), tape.matvec(L.u, h[l])), L.bias);
      c[l] = tape.cell_memory(z, c[l]);
      h[l] = tape.cell_output(z, c[l]);
      // Dropout acts on what leaves the layer; the recurrent state itself
      // is carried undropped.
      in = masks ? tape.mask(h[l], (*masks)[t * layers + l]) : h[l];
    }
    if (tok.is_pop()) continue;
    int logits = tape.add_bias(tape.matvec(output_, in), output_bias_);
    const auto& legal = tok.legal ? *tok.legal : kNoLegal;
    if (config_.use_three_level_loss && !tok.legal) {
      throw Error(ErrorCode::ShapeMismatch, "three-level loss needs the legal set");
    }
    int node = tape.loss(logits, tok.truth, legal, config_.lambda, config_.use_three_level_loss);
    losses.push_back(node);
    r.xe_sum += tape.report(node).xe;
    r.constraint_sum += tape.report(node).constraint;
    r.mean_loss += tape.value(node)[0];
  }
  r.predictions = static_cast<int>(losses.size());
  grad.setZero(count_);
  for (int l = 0; l < layers; ++l) {
    state.h[l] = tape.value(h[l]);
    state.c[l] = tape.value(c[l]);
  }
  if (r.predictions == 0) return r;
  r.mean_loss /= r.predictions;
  r.objective = r.mean_loss + regularizer();
  tape.backward(1.0 / r.predictions, grad);
  add_regularizer_gradient(grad);
  return r;
}

double LstmModel::window_objective(std::span<const ModelToken> tokens, const LstmState& state,
                                   const std::vector<VectorXd>* masks) const {
  // Forward pass that mirrors window_gradient without recording.
  const int layers = config_.layers;
  const Eigen::Index H = config_.hidden;
  LstmState s = state;
  VectorXd x, z(4 * H), logits, probs;
  double sum = 0;
  int n = 0;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const ModelToken& tok = tokens[t];
    encode(tok, x);
    VectorXd in = x;
    for (int l = 0; l < layers; ++l) {
      const Layer& L = layers_[l];
      Eigen::Map<const Eigen::MatrixXd> W(theta.data() + L.w.offset, L.w.rows, L.w.cols);
      Eigen::Map<const Eigen::MatrixXd> U(theta.data() + L.u.offset, L.u.rows, L.u.cols);
      z.noalias() = W * in;
      z.noalias() += U * s.h[l];
      z += theta.segment(L.bias, 4 * H);
      for (Eigen::Index k = 0; k < H; ++k) {
        double i = sigmoid(z[k]), f = sigmoid(z[H + k]), g = std::tanh(z[2 * H + k]);
        double o = sigmoid(z[3 * H + k]);
        s.c[l][k] = f * s.c[l][k] + i * g;
        s.h[l][k] = o * std::tanh(s.c[l][k]);
      }
      in = masks ? VectorXd(s.h[l].cwiseProduct((*masks)[t * layers + l])) : s.h[l];
    }
    if (tok.is_pop()) continue;
    Eigen::Map<const Eigen::MatrixXd> V(theta.data() + output_.offset, output_.rows, output_.cols);
    logits = V * in + theta.segment(output_bias_, output_.rows);
    probs.resize(logits.size());
    softmax({logits.data(), static_cast<std::size_t>(logits.size())},
            {probs.data(), static_cast<std::size_t>(probs.size())});
    std::span<const double> ps(probs.data(), static_cast<std::size_t>(probs.size()));
    if (config_.use_three_level_loss) {
      sum += three_level_loss(ps, tok.truth, *tok.legal, config_.lambda, true).total;
    } else {
      sum += -std::log(probs[tok.truth]);
    }
    ++n;
  }
  return n == 0 ? 0.0 : sum / n + regularizer();
}

}  // namespace nam::neural
