#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nam/neural/config.h"
#include "nam/neural/tape.h"
#include "nam/util/rng.h"

namespace nam::neural {

/// One token as seen by the model: the nonterminal to expand (or a pop),
/// the context bits, and for prediction tokens the truth and P_c.
struct ModelToken {
  int nonterminal = -1;                           // -1 for a pop
  int truth = -1;                                 // production, -1 for a pop
  const std::vector<std::uint8_t>* context = nullptr;
  const std::vector<int>* legal = nullptr;        // needed by the three-level loss

  bool is_pop() const { return nonterminal < 0; }
};

struct LstmState {
  std::vector<Eigen::VectorXd> h;
  std::vector<Eigen::VectorXd> c;
};

struct WindowResult {
  double objective = 0;    // mean loss + regularizers
  double mean_loss = 0;    // mean total loss over predictions
  double xe_sum = 0;
  double constraint_sum = 0;
  int predictions = 0;
};

/// Stacked LSTM over encoded tokens with a linear output over P. The
/// parameters live in one flat vector; matrices are column-major views.
class LstmModel {
 public:
  struct Layer {
    Block w;              // 4H x input
    Block u;              // 4H x H
    Eigen::Index bias;    // 4H, gate order i f g o
  };

  explicit LstmModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const Block& output() const { return output_; }
  Eigen::Index output_bias() const { return output_bias_; }
  Eigen::Index parameter_count() const { return count_; }

  /// Uniform(+-sqrt(6 / (fan_in + fan_out))) weights, zero biases except
  /// the forget gate at 1.
  void initialize(Rng& rng);

  /// Weight matrices subject to L1/L2 (biases are not).
  std::vector<Block> weight_blocks() const;
  double regularizer() const;
  void add_regularizer_gradient(Eigen::VectorXd& grad) const;

  LstmState zero_state() const;
  void encode(const ModelToken& token, Eigen::VectorXd& x) const;

  /// Forward step without a tape. Writes logits when `logits` is non-null.
  void step(const ModelToken& token, LstmState& state, Eigen::VectorXd* logits) const;

  /// Inverted-dropout masks for `tokens` tokens: one vector per (token,
  /// layer), entries 0 or 1/keep_prob.
  std::vector<Eigen::VectorXd> draw_masks(std::size_t tokens, Rng& rng) const;

  /// Objective of one window and its gradient (overwrites `grad`). `state`
  /// holds the carried state on entry and the detached final state on
  /// exit. `masks` may be null (no dropout).
  WindowResult window_gradient(std::span<const ModelToken> tokens, LstmState& state,
                               const std::vector<Eigen::VectorXd>* masks, Tape& tape,
                               Eigen::VectorXd& grad) const;

  /// Same objective, forward only, for finite-difference checks.
  double window_objective(std::span<const ModelToken> tokens, const LstmState& state,
                          const std::vector<Eigen::VectorXd>* masks) const;

  Eigen::VectorXd theta;

 private:
  ModelConfig config_;
  std::vector<Layer> layers_;
  Block output_;
  Eigen::Index output_bias_ = 0;
  Eigen::Index count_ = 0;
};

}  // namespace nam::neural
