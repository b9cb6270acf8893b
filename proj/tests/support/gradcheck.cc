#include "gradcheck.h"

#include <algorithm>
#include <cmath>

namespace gradcheck {

using nam::neural::LstmModel;
using nam::neural::LstmState;
using nam::neural::ModelConfig;

Window random_window(const ModelConfig& config, nam::Rng& rng, int predictions, int pops) {
  Window w;
  const int total = predictions + pops;
  std::vector<char> is_pop(total, 0);
  for (int i = 0; i < pops; ++i) is_pop[i] = 1;
  rng.shuffle(std::span<char>(is_pop));
  // The window starts on a step.
  if (is_pop[0]) {
    auto first_step = std::find(is_pop.begin(), is_pop.end(), 0);
    if (first_step != is_pop.end()) std::iter_swap(is_pop.begin(), first_step);
  }
  w.contexts.resize(total);
  w.legal.resize(total);
  for (int t = 0; t < total; ++t) {
    auto& ctx = w.contexts[t];
    ctx.resize(config.context);
    for (auto& b : ctx) b = static_cast<std::uint8_t>(rng.below(2));
    auto& legal = w.legal[t];
    nam::neural::ModelToken tok;
    if (!is_pop[t]) {
      tok.nonterminal = rng.below(config.nonterminals);
      tok.truth = rng.below(config.productions);
      legal.push_back(tok.truth);
      for (int p = 0; p < config.productions; ++p) {
        if (p != tok.truth && rng.chance(0.4)) legal.push_back(p);
      }
      std::sort(legal.begin(), legal.end());
    }
    w.tokens.push_back(tok);
  }
  for (int t = 0; t < total; ++t) {
    w.tokens[t].context = &w.contexts[t];
    if (!w.tokens[t].is_pop()) w.tokens[t].legal = &w.legal[t];
  }
  return w;
}

LstmState random_state(const LstmModel& model, nam::Rng& rng) {
  LstmState s = model.zero_state();
  for (auto* part : {&s.h, &s.c}) {
    for (auto& v : *part) {
      for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = rng.uniform() - 0.5;
    }
  }
  return s;
}

Result compare(const LstmModel& model, const Window& window, const LstmState& state,
               const std::vector<Eigen::VectorXd>* masks, double step, double floor) {
  LstmModel probe = model;
  nam::neural::Tape tape;
  Eigen::VectorXd grad;
  LstmState carried = state;
  model.window_gradient(window.tokens, carried, masks, tape, grad);

  std::vector<bool> weight(model.parameter_count(), false);
  for (const auto& b : model.weight_blocks()) {
    for (Eigen::Index i = 0; i < b.size(); ++i) weight[b.offset + i] = true;
  }
  Result r;
  for (Eigen::Index i = 0; i < model.parameter_count(); ++i) {
    const double w = model.theta[i];
    if (weight[i] && model.config().l1 > 0 && std::abs(w) < 10 * step) {
      ++r.skipped;
      continue;
    }
    probe.theta[i] = w + step;
    double up = probe.window_objective(window.tokens, state, masks);
    probe.theta[i] = w - step;
    double down = probe.window_objective(window.tokens, state, masks);
    probe.theta[i] = w;
    double numeric = (up - down) / (2 * step);
    double analytic = grad[i];
    double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    double rel = std::abs(analytic - numeric) / denom;
    if (rel > r.max_relative_error) {
      r.max_relative_error = rel;
      r.worst = i;
    }
    ++r.checked;
  }
  return r;
}

}  // namespace gradcheck
