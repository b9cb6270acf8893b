#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nam/ag/grammar.h"
#include "nam/ast.h"
#include "nam/constraint.h"

namespace nam::ag {

struct AttributedNode {
  int production = -1;
  std::vector<int> path;                      // child indices from the root
  std::vector<std::optional<Value>> values;   // by attribute slot of the nonterminal
  std::vector<std::size_t> children;          // indices into AttributedTree::nodes()
};

/// Attribute values of every node of a tree, stored in preorder.
class AttributedTree {
 public:
  const std::vector<AttributedNode>& nodes() const { return nodes_; }

  /// Value of attribute `attr` on the node at preorder index `node`.
  /// Throws Error(EvaluationFailure) when the attribute does not exist.
  const Value& value(std::size_t node, const std::string& attr) const;

  /// Number of times the evaluator entered / left a node. A single
  /// left-to-right pass enters and leaves each node exactly once.
  std::size_t entries() const { return entries_; }
  std::size_t exits() const { return exits_; }

 private:
  friend class Evaluator;

  const Grammar* grammar_ = nullptr;
  std::vector<AttributedNode> nodes_;
  std::size_t entries_ = 0;
  std::size_t exits_ = 0;
};

/// Evaluates all attribute instances in one depth-first, left-to-right pass:
/// inherited attributes of a child are computed just before descending into
/// it, synthesized attributes of a node just after its last child. Reading an
/// attribute that has not been set throws Error(EvaluationFailure), so a
/// grammar that is not L-attributed cannot silently produce wrong values.
AttributedTree evaluate_attributes(const Grammar& grammar, const AstTree& tree);

struct Violation {
  std::vector<int> path;
  ConstraintId constraint = ConstraintId::DeclaredVariable;
  std::string message;
};

std::string format_path(const std::vector<int>& path);

/// All nodes whose production carries a failing rule for `constraint`; at
/// most one violation per node. Throws Error(UnknownConstraint) when the
/// grammar has no rules for it.
std::vector<Violation> check_tree(const Grammar& grammar, const AstTree& tree,
                                  ConstraintId constraint);

/// Same, over an already-evaluated tree.
std::vector<Violation> check_attributed(const Grammar& grammar, const AttributedTree& tree,
                                        ConstraintId constraint);

}  // namespace nam::ag
