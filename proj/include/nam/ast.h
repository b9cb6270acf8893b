#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "nam/ag/grammar.h"

namespace nam {

/// An abstract-syntax tree over a grammar's context-free backbone. Children
/// correspond to the nonterminal occurrences of the node's production.
struct AstTree {
  std::string nonterminal;
  std::string production;
  std::vector<AstTree> children;

  std::size_t node_count() const;

  friend bool operator==(const AstTree&, const AstTree&) = default;
};

/// Compact rendering, e.g. `Numeral(Pair(One,Zero))`.
std::string to_string(const AstTree& tree);

/// Parses the compact rendering. Node nonterminals are taken from the
/// grammar: the root nonterminal for the outermost node and the production's
/// child nonterminals below it. Identifiers that name no production are kept
/// verbatim as leaves (raw variable names, for instance).
AstTree parse_tree(const ag::Grammar& grammar, std::string_view text);

/// Throws Error(MalformedTree) unless every node names a production of its
/// nonterminal and has exactly that production's children.
void check_well_formed(const ag::Grammar& grammar, const AstTree& tree);

}  // namespace nam
