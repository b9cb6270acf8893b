#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nam/ag/value.h"
#include "nam/constraint.h"

namespace nam::ag {

enum class Direction { Inherited, Synthesized };

struct AttributeDecl {
  std::string symbol;
  std::string name;
  Direction direction = Direction::Inherited;
  ValueKind kind = ValueKind::Integer;
  int line = 0;
};

/// Reference to an attribute occurrence, e.g. `bits$2.positionIn`.
/// `occurrence` indexes X_0..X_k of the owning production (0 = lhs) and is
/// -1 when the text could not be resolved; `slot` indexes the attribute
/// within the occurrence symbol's declaration list (-1 when unknown).
struct AttrRef {
  std::string text;
  std::string symbol;
  std::string attr;
  int occurrence = -1;
  int slot = -1;
};

struct Expr {
  enum class Kind { Ref, Literal, Call };

  Kind kind = Kind::Literal;
  AttrRef ref;
  Value literal;
  std::string function;
  std::vector<Expr> args;

  /// All attribute references, in left-to-right order.
  void collect_refs(std::vector<const AttrRef*>& out) const;
};

struct AttributeEquation {
  AttrRef target;
  Expr expr;
  int line = 0;

  std::vector<const AttrRef*> dependencies() const;
};

struct ConstraintRule {
  ConstraintId id = ConstraintId::DeclaredVariable;
  Expr expr;
  int line = 0;
};

struct Production {
  std::string id;
  std::string lhs;
  std::vector<std::string> rhs;                 // X_1..X_k
  std::vector<AttributeEquation> equations;
  std::vector<ConstraintRule> constraints;
  int line = 0;

  // Derived at load time: which rhs positions are nonterminals (tree children)
  // and their nonterminal indices.
  std::vector<int> child_positions;             // 1-based occurrence index
  std::vector<int> child_nonterminals;

  int arity() const { return static_cast<int>(child_nonterminals.size()); }
};

/// Production roles that drive the logical machine. They name which parts of
/// the grammar declare variables, open scopes, and impose type expectations.
struct MachineBindings {
  struct Decl {
    int type_child = -1;  // 0-based child index
    int var_child = -1;
  };
  struct Expect {
    int child = -1;         // child whose subtree carries the expectation
    int source_child = -1;  // child holding the variable whose type is expected
  };

  int var_nonterminal = -1;
  std::vector<std::string> type_tags;
  std::unordered_map<int, int> type_keyword;     // production -> type index
  std::unordered_map<int, Decl> decl;            // production -> roles
  std::unordered_map<int, bool> scope;           // production -> opens scope
  std::unordered_map<int, std::vector<Expect>> expect;
  std::unordered_map<int, bool> pass;            // children inherit expectation
};

class Grammar {
 public:
  const std::string& name() const { return name_; }
  const std::string& source() const { return source_; }
  std::uint64_t hash() const { return hash_; }

  const std::vector<std::string>& nonterminals() const { return nonterminals_; }
  const std::vector<std::string>& terminals() const { return terminals_; }
  const std::vector<Production>& productions() const { return productions_; }
  const std::vector<AttributeDecl>& attribute_decls() const { return attributes_; }

  int nonterminal_count() const { return static_cast<int>(nonterminals_.size()); }
  int production_count() const { return static_cast<int>(productions_.size()); }

  const std::string& root() const { return root_; }
  int root_index() const { return nonterminal_index(root_); }

  /// -1 when absent.
  int nonterminal_index(const std::string& name) const;
  int production_index(const std::string& id) const;

  const Production& production(int index) const { return productions_.at(index); }

  /// P_n: production indices with nonterminal `n` on the left, in file order.
  const std::vector<int>& productions_of(int nonterminal) const;

  bool is_nonterminal(const std::string& symbol) const;
  bool is_terminal(const std::string& symbol) const;

  /// Attribute declarations of `symbol`, in declaration order (slot order).
  std::vector<const AttributeDecl*> attributes_of(const std::string& symbol) const;
  const AttributeDecl* find_attribute(const std::string& symbol, const std::string& name) const;
  int attribute_slot(const std::string& symbol, const std::string& name) const;

  const MachineBindings& machine() const { return machine_; }

  /// True when some production carries a rule for constraint `id`.
  bool has_constraint(ConstraintId id) const;

  /// Symbol of occurrence `occ` (0 = lhs) of production `p`.
  const std::string& occurrence_symbol(const Production& p, int occ) const;

 private:
  friend class GrammarBuilder;

  std::string name_;
  std::string source_;
  std::uint64_t hash_ = 0;
  std::vector<std::string> nonterminals_;
  std::vector<std::string> terminals_;
  std::string root_;
  std::vector<Production> productions_;
  std::vector<AttributeDecl> attributes_;
  std::unordered_map<std::string, int> nonterminal_index_;
  std::unordered_map<std::string, int> production_index_;
  std::vector<std::vector<int>> productions_of_;
  std::map<std::string, std::vector<int>> attributes_by_symbol_;
  MachineBindings machine_;
};

/// Parses the line-oriented grammar format. Syntax errors throw
/// Error(GrammarParse); semantic problems are left for validate_grammar.
Grammar load_grammar(const std::string& text, const std::string& name = "<memory>");
Grammar load_grammar_file(const std::string& path);

/// FNV-1a 64-bit hash, used for grammar and corpus fingerprints.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace nam::ag
