#include "nam/ast.h"

#include <cctype>

#include "nam/error.h"

namespace nam {

std::size_t AstTree::node_count() const {
  std::size_t n = 1;
  for (const auto& c : children) n += c.node_count();
  return n;
}

namespace {

void render(const AstTree& t, std::string& out) {
  out += t.production;
  if (t.children.empty()) return;
  out += '(';
  for (std::size_t i = 0; i < t.children.size(); ++i) {
    if (i) out += ',';
    render(t.children[i], out);
  }
  out += ')';
}

class TreeParser {
 public:
  TreeParser(const ag::Grammar& g, std::string_view s) : g_(g), s_(s) {}

  AstTree parse() {
    AstTree t = node(g_.root());
    skip_ws();
    if (pos_ != s_.size()) fail("trailing text");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::MalformedTree,
                "cannot parse tree at offset " + std::to_string(pos_) + ": " + what);
  }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  AstTree node(const std::string& nonterminal) {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      ++pos_;
    }
    if (start == pos_) fail("expected production name");
    AstTree t;
    t.nonterminal = nonterminal;
    t.production = std::string(s_.substr(start, pos_ - start));
    int pi = g_.production_index(t.production);
    std::vector<int> kids = pi >= 0 ? g_.production(pi).child_nonterminals : std::vector<int>{};
    if (accept('(')) {
      if (!accept(')')) {
        std::size_t i = 0;
        do {
          std::string child_nt = i < kids.size() ? g_.nonterminals()[kids[i]] : std::string("?");
          t.children.push_back(node(child_nt));
          ++i;
        } while (accept(','));
        if (!accept(')')) fail("expected ')'");
      }
    }
    return t;
  }

  const ag::Grammar& g_;
  std::string_view s_;
  std::size_t pos_ = 0;
};

void check_node(const ag::Grammar& g, const AstTree& t, const std::string& path) {
  int pi = g.production_index(t.production);
  if (pi < 0) {
    throw Error(ErrorCode::MalformedTree, "unknown production '" + t.production + "' at " + path);
  }
  const auto& p = g.production(pi);
  if (p.lhs != t.nonterminal) {
    throw Error(ErrorCode::MalformedTree, "production " + p.id + " derives " + p.lhs +
                                              ", but node at " + path + " is " + t.nonterminal);
  }
  if (static_cast<int>(t.children.size()) != p.arity()) {
    throw Error(ErrorCode::MalformedTree, "node " + p.id + " at " + path + " has " +
                                              std::to_string(t.children.size()) +
                                              " children, expected " + std::to_string(p.arity()));
  }
  for (std::size_t i = 0; i < t.children.size(); ++i) {
    const auto& expected = g.nonterminals()[p.child_nonterminals[i]];
    if (t.children[i].nonterminal != expected) {
      throw Error(ErrorCode::MalformedTree, "child " + std::to_string(i) + " of " + p.id +
                                                " at " + path + " must be " + expected);
    }
    check_node(g, t.children[i], path + "/" + std::to_string(i));
  }
}

}  // namespace

std::string to_string(const AstTree& tree) {
  std::string out;
  render(tree, out);
  return out;
}

AstTree parse_tree(const ag::Grammar& grammar, std::string_view text) {
  return TreeParser(grammar, text).parse();
}

void check_well_formed(const ag::Grammar& grammar, const AstTree& tree) {
  if (tree.nonterminal != grammar.root()) {
    throw Error(ErrorCode::MalformedTree,
                "tree root is " + tree.nonterminal + ", grammar root is " + grammar.root());
  }
  check_node(grammar, tree, "");
}

}  // namespace nam
