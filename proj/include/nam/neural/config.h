#pragma once

#include <cstdint>

#include "nam/util/kv.h"

namespace nam::neural {

struct ModelConfig {
  int hidden = 200;
  int layers = 2;
  int truncation = 50;          // prediction steps per backpropagation window
  double learning_rate = 0.001;
  double keep_prob = 0.9;       // dropout on LSTM layer outputs
  double l1 = 1e-4;
  double l2 = 1e-4;
  double lambda = 0.1;          // weight of the constraint penalty
  bool use_context = false;
  bool use_three_level_loss = false;
  std::uint64_t seed = 1;

  // Widths fixed by grammar and constraint.
  int nonterminals = 0;
  int context = 0;              // 0 when use_context is off
  int productions = 0;

  int input_width() const { return nonterminals + 1 + context; }

  /// Reads the hyperparameter keys that are present; throws
  /// Error(BadConfig) on out-of-range values.
  void apply(const KeyValues& kv);
  void write(KeyValues& kv) const;
  void check() const;
};

}  // namespace nam::neural
