#include "nam/linearizer.h"

#include <map>
#include <sstream>

#include "nam/error.h"

namespace nam {

namespace {

void emit(const ag::Grammar& g, const AstTree& t, TokenStream& out) {
  int n = g.nonterminal_index(t.nonterminal);
  int p = g.production_index(t.production);
  if (n < 0 || p < 0) {
    throw Error(ErrorCode::MalformedTree,
                "cannot linearize node " + t.nonterminal + ":" + t.production);
  }
  out.push_back(Token::step(n, p));
  for (const auto& c : t.children) emit(g, c, out);
  out.push_back(Token::pop());
}

[[noreturn]] void malformed(std::size_t at, const std::string& what) {
  throw Error(ErrorCode::MalformedStream, "token " + std::to_string(at) + ": " + what);
}

void rename(AstTree& t, int var_nonterminal, const ag::Grammar& g,
            std::map<std::string, int>& alias) {
  if (g.nonterminal_index(t.nonterminal) == var_nonterminal) {
    const auto& vars = g.productions_of(var_nonterminal);
    auto [it, inserted] = alias.try_emplace(t.production, static_cast<int>(alias.size()));
    if (it->second >= static_cast<int>(vars.size())) {
      throw Error(ErrorCode::TooManyVariables,
                  "more than " + std::to_string(vars.size()) + " distinct variables");
    }
    t.production = g.production(vars[it->second]).id;
  }
  for (auto& c : t.children) rename(c, var_nonterminal, g, alias);
}

}  // namespace

TokenStream linearize(const ag::Grammar& grammar, const AstTree& tree) {
  TokenStream out;
  emit(grammar, tree, out);
  return out;
}

AstTree delinearize(const TokenStream& stream, const ag::Grammar& grammar) {
  struct Open {
    AstTree node;
    int production;
  };
  std::vector<Open> stack;
  std::optional<AstTree> done;

  for (std::size_t i = 0; i < stream.size(); ++i) {
    const Token& tok = stream[i];
    if (done) malformed(i, "tokens after the root was closed");
    if (tok.is_pop()) {
      if (stack.empty()) malformed(i, "pop with no open node");
      Open top = std::move(stack.back());
      stack.pop_back();
      const auto& p = grammar.production(top.production);
      if (static_cast<int>(top.node.children.size()) != p.arity()) {
        malformed(i, "node " + p.id + " closed with " + std::to_string(top.node.children.size()) +
                         " of " + std::to_string(p.arity()) + " children");
      }
      if (stack.empty()) {
        done = std::move(top.node);
      } else {
        stack.back().node.children.push_back(std::move(top.node));
      }
      continue;
    }
    if (tok.production < 0 || tok.production >= grammar.production_count()) {
      malformed(i, "unknown production index");
    }
    const auto& p = grammar.production(tok.production);
    int expected;
    if (stack.empty()) {
      expected = grammar.root_index();
    } else {
      const auto& parent = stack.back();
      const auto& pp = grammar.production(parent.production);
      std::size_t slot = parent.node.children.size();
      if (static_cast<int>(slot) >= pp.arity()) {
        malformed(i, "node " + pp.id + " already has all " + std::to_string(pp.arity()) +
                         " children");
      }
      expected = pp.child_nonterminals[slot];
    }
    if (tok.nonterminal != expected) {
      malformed(i, "step for nonterminal " + std::to_string(tok.nonterminal) + " where " +
                       grammar.nonterminals()[expected] + " is expected");
    }
    if (p.lhs != grammar.nonterminals()[expected]) {
      malformed(i, "production " + p.id + " does not derive " + grammar.nonterminals()[expected]);
    }
    stack.push_back({AstTree{p.lhs, p.id, {}}, tok.production});
  }
  if (!stack.empty() || !done) malformed(stream.size(), "stream ends with open nodes");
  return std::move(*done);
}

bool pop_balanced(const TokenStream& stream) {
  long depth = 0;
  for (const auto& t : stream) {
    depth += t.is_pop() ? -1 : 1;
    if (depth < 0) return false;
  }
  return depth == 0;
}

std::size_t prediction_count(const TokenStream& stream) {
  std::size_t n = 0;
  for (const auto& t : stream) n += !t.is_pop();
  return n;
}

AstTree alias_variables(const AstTree& tree, const ag::Grammar& grammar) {
  int var_nt = grammar.machine().var_nonterminal;
  AstTree out = tree;
  if (var_nt < 0) return out;
  std::map<std::string, int> alias;
  rename(out, var_nt, grammar, alias);
  return out;
}

std::string format_stream(const ag::Grammar& grammar, const TokenStream& stream) {
  std::string out;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (i) out += ' ';
    if (stream[i].is_pop()) {
      out += "POP";
    } else {
      out += "P:";
      out += grammar.production(stream[i].production).id;
    }
  }
  return out;
}

TokenStream parse_stream(const ag::Grammar& grammar, std::string_view line) {
  TokenStream out;
  std::istringstream in{std::string(line)};
  std::string word;
  while (in >> word) {
    if (word == "POP") {
      out.push_back(Token::pop());
    } else if (word.starts_with("P:")) {
      int p = grammar.production_index(word.substr(2));
      if (p < 0) {
        throw Error(ErrorCode::MalformedStream, "unknown production '" + word.substr(2) + "'");
      }
      out.push_back(Token::step(grammar.nonterminal_index(grammar.production(p).lhs), p));
    } else {
      throw Error(ErrorCode::MalformedStream, "bad token '" + word + "'");
    }
  }
  return out;
}

}  // namespace nam
