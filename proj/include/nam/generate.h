#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nam/ag/grammar.h"
#include "nam/ast.h"
#include "nam/constraint.h"
#include "nam/machine.h"
#include "nam/neural/lstm.h"
#include "nam/sgwc.h"
#include "nam/util/rng.h"

namespace nam {

/// A production distribution driven token by token. The caller owns the
/// logical machine and passes its state before each token.
class Policy {
 public:
  virtual ~Policy() = default;

  /// Start of a new tree.
  virtual void reset() = 0;
  /// Consumes the step input at `state` and writes a distribution over all
  /// of P into `out`.
  virtual void predict(const ContextState& state, int nonterminal, std::vector<double>& out) = 0;
  /// Consumes a pop at `state`.
  virtual void pop(const ContextState& state) = 0;
};

class LstmPolicy : public Policy {
 public:
  explicit LstmPolicy(const neural::LstmModel& model);

  void reset() override;
  void predict(const ContextState& state, int nonterminal, std::vector<double>& out) override;
  void pop(const ContextState& state) override;

 private:
  void fill_context(const ContextState& state);

  const neural::LstmModel* model_;
  neural::LstmState state_;
  std::vector<std::uint8_t> context_;
  Eigen::VectorXd logits_;
};

class SgwcPolicy : public Policy {
 public:
  explicit SgwcPolicy(const Sgwc& table) : table_(&table) {}

  void reset() override {}
  void predict(const ContextState& state, int nonterminal, std::vector<double>& out) override {
    out = table_->predict(state, nonterminal);
  }
  void pop(const ContextState&) override {}

 private:
  const Sgwc* table_;
};

struct GeneratedTree {
  std::optional<AstTree> tree;  // empty when the node cap was hit
  int nodes = 0;
  int violations = 0;           // sampled productions outside P_c

  bool complete() const { return tree.has_value(); }
  bool legal() const { return complete() && violations == 0; }
};

/// Samples productions in preorder, restricted to P_n and renormalized,
/// until no hole remains or `node_cap` nodes exist.
GeneratedTree generate_tree(Policy& policy, const ag::Grammar& grammar, ConstraintId constraint,
                            Rng& rng, int node_cap);

struct TreeRecord {
  std::uint64_t seed = 0;
  int nodes = 0;
  int violations = 0;
  bool legal = false;
  bool complete = false;
  int vars = 0;   // distinct variables, 0 when incomplete
  int procs = 0;  // procedures, 0 when incomplete
};

struct GenerationReport {
  std::string model;
  std::string constraint;
  std::uint64_t seed = 0;
  std::vector<TreeRecord> trees;

  long violations() const;
  int legal() const;
  int illegal() const;     // complete with at least one violation
  int incomplete() const;

  /// Tab-separated lines with `#` header and an aggregate footer.
  std::string text() const;
  /// Throws Error(MalformedStream) when per-tree lines and footer disagree
  /// or a line does not parse.
  static GenerationReport parse(const std::string& text);
};

/// `count` trees, tree i seeded with derive_seed(seed, i). Complete trees
/// are appended to `trees` when it is non-null.
GenerationReport sample_batch(Policy& policy, const ag::Grammar& grammar, ConstraintId constraint,
                              int count, std::uint64_t seed, int node_cap,
                              std::vector<AstTree>* trees = nullptr);

}  // namespace nam
