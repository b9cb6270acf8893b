#include "nam/ag/evaluate.h"

#include "nam/error.h"

namespace nam::ag {

const Value& AttributedTree::value(std::size_t node, const std::string& attr) const {
  const auto& n = nodes_.at(node);
  const auto& p = grammar_->production(n.production);
  int slot = grammar_->attribute_slot(p.lhs, attr);
  if (slot < 0 || !n.values[slot]) {
    throw Error(ErrorCode::EvaluationFailure,
                "node " + format_path(n.path) + " has no value for '" + attr + "'");
  }
  return *n.values[slot];
}

std::string format_path(const std::vector<int>& path) {
  std::string out = "/";
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += "/";
    out += std::to_string(path[i]);
  }
  return out;
}

namespace {

using Slots = std::vector<std::optional<Value>>;

/// Attribute storage for the occurrences X_0..X_k of one production instance.
struct OccurrenceFrame {
  std::vector<const Slots*> slots;
};

Value eval_expr(const Grammar& g, const Production& p, const Expr& e,
                const OccurrenceFrame& frame, const std::vector<int>& path) {
  switch (e.kind) {
    case Expr::Kind::Literal:
      return e.literal;
    case Expr::Kind::Ref: {
      const Slots* s = frame.slots.at(e.ref.occurrence);
      if (!s || !(*s)[e.ref.slot]) {
        throw Error(ErrorCode::EvaluationFailure,
                    "read of unset attribute '" + e.ref.text + "' in " + p.id + " at " +
                        format_path(path));
      }
      return *(*s)[e.ref.slot];
    }
    case Expr::Kind::Call: {
      std::vector<Value> args;
      args.reserve(e.args.size());
      for (const auto& a : e.args) args.push_back(eval_expr(g, p, a, frame, path));
      return apply_function(e.function, args);
    }
  }
  throw Error(ErrorCode::EvaluationFailure, "bad expression");
}

}  // namespace

class Evaluator {
 public:
  explicit Evaluator(const Grammar& g) : g_(g) { out_.grammar_ = &g; }

  AttributedTree run(const AstTree& tree) {
    if (tree.nonterminal != g_.root()) {
      throw Error(ErrorCode::MalformedTree,
                  "tree root is " + tree.nonterminal + ", grammar root is " + g_.root());
    }
    build(tree, {});
    visit(0);
    return std::move(out_);
  }

 private:
  // Lays the nodes out in preorder before any attribute is computed.
  std::size_t build(const AstTree& t, std::vector<int> path) {
    int pi = g_.production_index(t.production);
    if (pi < 0) {
      throw Error(ErrorCode::MalformedTree,
                  "unknown production '" + t.production + "' at " + format_path(path));
    }
    const auto& p = g_.production(pi);
    if (p.lhs != t.nonterminal) {
      throw Error(ErrorCode::MalformedTree, "production " + p.id + " derives " + p.lhs +
                                                " but the node at " + format_path(path) +
                                                " is " + t.nonterminal);
    }
    if (static_cast<int>(t.children.size()) != p.arity()) {
      throw Error(ErrorCode::MalformedTree,
                  "arity mismatch for " + p.id + " at " + format_path(path));
    }
    std::size_t index = out_.nodes_.size();
    AttributedNode n;
    n.production = pi;
    n.path = path;
    n.values.resize(g_.attributes_of(p.lhs).size());
    out_.nodes_.push_back(std::move(n));
    for (std::size_t i = 0; i < t.children.size(); ++i) {
      auto child_path = path;
      child_path.push_back(static_cast<int>(i));
      std::size_t c = build(t.children[i], std::move(child_path));
      out_.nodes_[index].children.push_back(c);
    }
    return index;
  }

  void run_equations(const Production& p, int occurrence, Slots& target,
                     const OccurrenceFrame& frame, const std::vector<int>& path) {
    for (const auto& eq : p.equations) {
      if (eq.target.occurrence != occurrence) continue;
      target[eq.target.slot] = eval_expr(g_, p, eq.expr, frame, path);
    }
  }

  void visit(std::size_t index) {
    ++out_.entries_;
    AttributedNode& node = out_.nodes_[index];
    const auto& p = g_.production(node.production);
    const std::size_t occurrences = p.rhs.size() + 1;

    std::vector<Slots> terminal_slots(occurrences);
    std::vector<Slots*> writable(occurrences, nullptr);
    writable[0] = &node.values;
    std::vector<std::size_t> child_at(occurrences, 0);
    for (std::size_t ci = 0; ci < p.child_positions.size(); ++ci) {
      child_at[p.child_positions[ci]] = node.children[ci];
      writable[p.child_positions[ci]] = &out_.nodes_[node.children[ci]].values;
    }
    for (std::size_t occ = 1; occ < occurrences; ++occ) {
      if (!writable[occ]) {
        terminal_slots[occ].resize(g_.attributes_of(p.rhs[occ - 1]).size());
        writable[occ] = &terminal_slots[occ];
      }
    }
    OccurrenceFrame frame;
    frame.slots.assign(writable.begin(), writable.end());

    for (std::size_t occ = 1; occ < occurrences; ++occ) {
      run_equations(p, static_cast<int>(occ), *writable[occ], frame, node.path);
      if (child_at[occ] != 0) visit(child_at[occ]);
    }
    run_equations(p, 0, *writable[0], frame, node.path);
    ++out_.exits_;
  }

  const Grammar& g_;
  AttributedTree out_;
};

AttributedTree evaluate_attributes(const Grammar& grammar, const AstTree& tree) {
  return Evaluator(grammar).run(tree);
}

std::vector<Violation> check_attributed(const Grammar& grammar, const AttributedTree& tree,
                                        ConstraintId constraint) {
  if (!grammar.has_constraint(constraint)) {
    throw Error(ErrorCode::UnknownConstraint,
                std::string("grammar defines no rules for constraint ") +
                    constraint_name(constraint));
  }
  std::vector<Violation> out;
  const auto& nodes = tree.nodes();
  for (const auto& n : nodes) {
    const auto& p = grammar.production(n.production);
    OccurrenceFrame frame;
    frame.slots.assign(p.rhs.size() + 1, nullptr);
    frame.slots[0] = &n.values;
    for (std::size_t ci = 0; ci < p.child_positions.size(); ++ci) {
      frame.slots[p.child_positions[ci]] = &nodes[n.children[ci]].values;
    }
    for (const auto& rule : p.constraints) {
      if (rule.id != constraint) continue;
      Value ok = eval_expr(grammar, p, rule.expr, frame, n.path);
      if (!std::get<bool>(ok)) {
        out.push_back({n.path, constraint,
                       std::string(constraint_name(constraint)) + " fails at " + p.id + " " +
                           format_path(n.path)});
        break;
      }
    }
  }
  return out;
}

std::vector<Violation> check_tree(const Grammar& grammar, const AstTree& tree,
                                  ConstraintId constraint) {
  if (!grammar.has_constraint(constraint)) {
    throw Error(ErrorCode::UnknownConstraint,
                std::string("grammar defines no rules for constraint ") +
                    constraint_name(constraint));
  }
  return check_attributed(grammar, evaluate_attributes(grammar, tree), constraint);
}

}  // namespace nam::ag
