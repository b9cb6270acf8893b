#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "nam/ag/grammar.h"
#include "nam/ast.h"

namespace nam {

/// One element of a linearized tree: either a (nonterminal, production)
/// step or a pop indicator marking the end of a node's subtree.
struct Token {
  enum class Kind { Step, Pop };

  Kind kind = Kind::Pop;
  int nonterminal = -1;
  int production = -1;

  static Token step(int nonterminal, int production) {
    return {Kind::Step, nonterminal, production};
  }
  static Token pop() { return {}; }

  bool is_pop() const { return kind == Kind::Pop; }
  friend bool operator==(const Token&, const Token&) = default;
};

using TokenStream = std::vector<Token>;

/// Preorder emission: Step(n, p) at each node, then its children left to
/// right, then one Pop. A tree of k nodes yields k Steps and k Pops.
TokenStream linearize(const ag::Grammar& grammar, const AstTree& tree);

/// Exact inverse of linearize. Throws Error(MalformedStream) on pop
/// imbalance, arity mismatch, or a step whose production does not derive
/// the expected nonterminal.
AstTree delinearize(const TokenStream& stream, const ag::Grammar& grammar);

/// True when running depth never goes negative and ends at zero.
bool pop_balanced(const TokenStream& stream);

/// Number of Step tokens.
std::size_t prediction_count(const TokenStream& stream);

/// Renames variables by order of first use: the i-th distinct production
/// seen in preorder under the grammar's variable nonterminal becomes the
/// (i-1)-th variable production. Throws Error(TooManyVariables) when more
/// distinct names occur than the grammar has variable productions.
AstTree alias_variables(const AstTree& tree, const ag::Grammar& grammar);

/// Corpus line form: `P:<prod-id>` per step and `POP` per pop.
std::string format_stream(const ag::Grammar& grammar, const TokenStream& stream);
TokenStream parse_stream(const ag::Grammar& grammar, std::string_view line);

}  // namespace nam
