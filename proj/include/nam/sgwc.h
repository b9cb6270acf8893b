#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nam/ag/grammar.h"
#include "nam/constraint.h"
#include "nam/linearizer.h"
#include "nam/machine.h"

namespace nam {

/// Stochastic grammar with context: production counts keyed by
/// (nonterminal, exact context bitstring), smoothed by alpha over P_c.
class Sgwc {
 public:
  Sgwc(const ag::Grammar& grammar, ConstraintId constraint, double alpha = 1.0);

  const ag::Grammar& grammar() const { return *grammar_; }
  ConstraintId constraint() const { return constraint_; }
  double alpha() const { return alpha_; }

  /// Replays each stream through the logical machine, counting the true
  /// production at every step.
  void fit(const std::vector<TokenStream>& streams);
  void observe(const TokenStream& stream);

  /// Distribution over all of P; zero outside P_c. Unseen keys, or keys
  /// whose smoothed mass over P_c is zero, fall back to uniform over P_c.
  /// Throws Error(UnknownNonterminal).
  std::vector<double> predict(const ContextState& state, int nonterminal) const;

  /// Mean of -log p(truth) over steps, natural log.
  double nll(const std::vector<TokenStream>& streams) const;

  long count(int nonterminal, const std::string& key, int production) const;
  long total_count() const;
  std::size_t cells() const { return counts_.size(); }

  /// Sorted lines `<nonterminal> <bits> <production> <count>`, names as in
  /// the grammar.
  std::string table() const;
  /// Replaces the counts with those of a table(). Throws Error(MalformedStream)
  /// on bad lines and Error(UnknownNonterminal/UnknownProduction).
  void read_table(const std::string& text);

  static std::string key(const ContextState& state);

 private:
  const ag::Grammar* grammar_;
  ConstraintId constraint_;
  double alpha_;
  std::map<std::pair<int, std::string>, std::map<int, long>> counts_;
};

}  // namespace nam
