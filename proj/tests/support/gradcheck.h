#pragma once

// Finite-difference oracle for the LSTM window objective, shared by the
// unit tests and the acceptance gate.

#include <cstdint>
#include <vector>

#include "nam/neural/lstm.h"

namespace gradcheck {

/// Owns the storage that ModelToken points into.
struct Window {
  std::vector<std::vector<std::uint8_t>> contexts;
  std::vector<std::vector<int>> legal;
  std::vector<nam::neural::ModelToken> tokens;
};

/// `predictions` steps with `pops` pops interleaved at random positions.
/// Truths and legal sets (always containing the truth) are random.
Window random_window(const nam::neural::ModelConfig& config, nam::Rng& rng, int predictions,
                     int pops);

/// Random nonzero carried state.
nam::neural::LstmState random_state(const nam::neural::LstmModel& model, nam::Rng& rng);

struct Result {
  double max_relative_error = 0;
  long checked = 0;
  long skipped = 0;   // weights too close to the L1 kink
  long worst = -1;
};

/// Compares window_gradient with central differences of window_objective
/// on every parameter. relative error = |a - n| / max(|a|, |n|, floor).
Result compare(const nam::neural::LstmModel& model, const Window& window,
               const nam::neural::LstmState& state,
               const std::vector<Eigen::VectorXd>* masks, double step = 1e-5,
               double floor = 1e-6);

}  // namespace gradcheck
