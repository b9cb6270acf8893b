#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "nam/ag/grammar.h"
#include "nam/constraint.h"
#include "nam/linearizer.h"

namespace nam {

class MachineTables;

/// The hole the next Step must fill.
struct Focus {
  int nonterminal = -1;  // -1 when the next token must be a Pop, or the tree is complete
  bool is_use = false;   // variable position that reads (not declares) a variable
  int expected = -1;     // type index imposed on this position, -1 for none
};

/// Running constraint state of the logical machine. The state is a value:
/// copying it forks the machine.
class ContextState {
 public:
  ConstraintId constraint() const;
  const ag::Grammar& grammar() const;

  /// Advances by one token. Throws Error(InconsistentStream) on a Pop with
  /// no open node, a Pop before all children were produced, or a Step that
  /// does not fill the current hole.
  void update(const Token& token);

  Focus focus() const;
  bool complete() const { return complete_; }

  /// C_d: one bit per variable production, set when that variable is
  /// visible. C_t: V*T bits (variable-major) set when (v, t) is bound and
  /// visible, followed by T bits naming the type required at the focus.
  std::vector<std::uint8_t> context_vector() const;
  void write_context(double* out) const;
  int vector_length() const;

  /// P_c at the focus for nonterminal `n`, in grammar order. Throws
  /// Error(UnknownNonterminal) for an index outside N.
  std::vector<int> legal_productions(int n) const;
  bool is_legal(int production) const;

  /// Distinct variables visible at this point.
  int declared_count() const;
  /// Visible (variable, type) bindings, variable-major bitmask of V*T bits.
  std::vector<std::uint8_t> visible_bindings() const;

  friend bool operator==(const ContextState& a, const ContextState& b);

 private:
  friend ContextState init_context(const ag::Grammar&, ConstraintId);

  struct Frame {
    int production = -1;
    int next_child = 0;
    int expected = -1;
    std::vector<int> child_productions;
  };

  void visible_into(std::vector<std::uint8_t>& bits) const;
  int unique_type(int var) const;
  int child_expectation(const Frame& f, int child) const;
  bool viable(int production, const Focus& at) const;

  std::shared_ptr<const MachineTables> tables_;
  std::vector<Frame> frames_;
  std::vector<std::vector<std::uint8_t>> scopes_;  // V*T bits per scope
  bool complete_ = false;
};

ContextState init_context(const ag::Grammar& grammar, ConstraintId constraint);

/// Context vector length for (grammar, constraint).
int context_length(const ag::Grammar& grammar, ConstraintId constraint);

struct Partition {
  std::vector<int> correct;
  std::vector<int> legal_incorrect;
  std::vector<int> illegal;
};

/// Splits P_n into {p_true}, P_c - {p_true}, P_n - P_c. Throws
/// Error(IllegalTruth) if p_true is not in P_c.
Partition partition(const ag::Grammar& grammar, int n, int p_true, const std::vector<int>& legal);

}  // namespace nam
