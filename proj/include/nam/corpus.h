#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nam/ag/grammar.h"
#include "nam/ast.h"
#include "nam/util/kv.h"
#include "nam/util/rng.h"

namespace nam {

/// Targets for the synthetic mini-C corpus. Means are per program; counts
/// are drawn from truncated geometric laws on [1, cap] tuned to each mean.
struct CorpusSpec {
  int programs = 1500;
  double mean_vars = 7.01;
  double mean_types = 3.29;
  double mean_procs = 6.47;
  double mean_stmts = 101.82;  // statement nodes, nested ones included
  double holdout = 0.15;
  std::uint64_t seed = 1;
  int max_procs = 16;
  int max_stmts = 300;

  static CorpusSpec from(const KeyValues& kv);
  KeyValues to_kv() const;

  /// Throws Error(SpecInfeasible) when the targets cannot be met under the
  /// grammar's variable and type caps.
  void check(const ag::Grammar& grammar) const;
};

/// P(k) proportional to r^(k-1) on k = 1..cap. r < 1 skews toward 1,
/// r > 1 toward cap; r is found by bisection so the mean hits the target.
class TruncatedGeometric {
 public:
  TruncatedGeometric(double mean, int cap);

  int sample(Rng& rng) const;
  double mean() const;
  double ratio() const { return ratio_; }
  /// P(k) at index k - 1.
  const std::vector<double>& probabilities() const { return weights_; }

 private:
  void normalize();

  std::vector<double> weights_;
  double ratio_ = 0;
};

struct TreeMeasures {
  int vars = 0;   // distinct variable productions
  int types = 0;  // distinct type keywords
  int procs = 0;  // scope-opening nodes
  int stmts = 0;  // statement nodes
};

TreeMeasures measure(const ag::Grammar& grammar, const AstTree& tree);

struct CorpusStats {
  std::size_t count = 0;
  double mean_vars = 0, mean_types = 0, mean_procs = 0, mean_stmts = 0;
  double var_vars = 0, var_types = 0, var_procs = 0, var_stmts = 0;
};

CorpusStats corpus_stats(const ag::Grammar& grammar, const std::vector<AstTree>& trees);

/// One program whose every step is legal under both constraints. Variables
/// are named in declaration order, so the tree is already aliased.
AstTree generate_program(const ag::Grammar& grammar, const CorpusSpec& spec, Rng& rng);

struct Corpus {
  std::vector<AstTree> train;
  std::vector<AstTree> test;
  CorpusSpec spec;
  std::uint64_t grammar_hash = 0;
};

/// Seeded uniform partition; the test side gets round(fraction * n) trees.
std::pair<std::vector<AstTree>, std::vector<AstTree>> split(std::vector<AstTree> trees,
                                                              double fraction,
                                                              std::uint64_t seed);

/// spec.programs programs, program i seeded from (spec.seed, i), then split.
Corpus generate_corpus(const ag::Grammar& grammar, const CorpusSpec& spec);

/// Directory layout: train.txt, test.txt (one linearized tree per line) and
/// manifest.txt (spec, seed, grammar hash, statistics).
void write_corpus(const std::string& dir, const ag::Grammar& grammar, const Corpus& corpus);

/// Throws Error(CorpusGrammarMismatch) when the manifest names another grammar.
Corpus read_corpus(const std::string& dir, const ag::Grammar& grammar);

std::string hex64(std::uint64_t x);

}  // namespace nam
