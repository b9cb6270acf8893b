#include <functional>
#include <random>

#include "doctest.h"
#include "nam/error.h"
#include "nam/linearizer.h"
#include "oracles.h"

using namespace nam;

namespace {

// Reference preorder traversal written independently of linearize().
void reference(const ag::Grammar& g, const AstTree& t, TokenStream& out) {
  out.push_back(Token::step(g.nonterminal_index(t.nonterminal), g.production_index(t.production)));
  for (const auto& c : t.children) reference(g, c, out);
  out.push_back(Token::pop());
}

Token step(const ag::Grammar& g, const char* nt, const char* p) {
  return Token::step(g.nonterminal_index(nt), g.production_index(p));
}

void shape(const AstTree& t, std::vector<std::size_t>& out) {
  out.push_back(t.children.size());
  for (const auto& c : t.children) shape(c, out);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("linearize a two-node numeral") {
  const auto& g = gen::numeral();
  auto s = linearize(g, parse_tree(g, "Numeral(One)"));
  TokenStream want{step(g, "numeral", "Numeral"), step(g, "bits", "One"), Token::pop(),
                   Token::pop()};
  CHECK(s == want);
  CHECK(delinearize(want, g) == parse_tree(g, "Numeral(One)"));
}

TEST_CASE("linearize a pair") {
  const auto& g = gen::numeral();
  auto t = parse_tree(g, "Numeral(Pair(One,Zero))");
  TokenStream want{step(g, "numeral", "Numeral"), step(g, "bits", "Pair"),
                   step(g, "bits", "One"),        Token::pop(),
                   step(g, "bits", "Zero"),       Token::pop(),
                   Token::pop(),                  Token::pop()};
  CHECK(linearize(g, t) == want);
  TokenStream ref;
  reference(g, t, ref);
  CHECK(ref == want);
}

TEST_CASE("round trip and pop balance on random trees") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    const auto& g = (i % 2) ? gen::minic() : gen::numeral();
    auto t = (i % 2) ? gen::random_tree(g, rng, 1 + static_cast<int>(rng() % 150))
                     : gen::random_numeral(1 + static_cast<int>(rng() % 31), rng);
    auto s = linearize(g, t);
    TokenStream ref;
    reference(g, t, ref);
    CHECK(s == ref);
    CHECK(pop_balanced(s));
    CHECK(s.size() == 2 * t.node_count());
    CHECK(prediction_count(s) == t.node_count());
    CHECK(delinearize(s, g) == t);
    CHECK(parse_stream(g, format_stream(g, s)) == s);
  }
}

TEST_CASE("malformed streams") {
  const auto& g = gen::numeral();
  auto s = linearize(g, parse_tree(g, "Numeral(Pair(One,Zero))"));

  auto missing_pop = s;
  missing_pop.pop_back();
  CHECK_FALSE(pop_balanced(missing_pop));
  CHECK(code_of([&] { delinearize(missing_pop, g); }) == ErrorCode::MalformedStream);

  auto extra_pop = s;
  extra_pop.push_back(Token::pop());
  CHECK(code_of([&] { delinearize(extra_pop, g); }) == ErrorCode::MalformedStream);

  // Pair closed after one child.
  TokenStream short_pair{step(g, "numeral", "Numeral"), step(g, "bits", "Pair"),
                         step(g, "bits", "One"), Token::pop(), Token::pop(), Token::pop()};
  CHECK(code_of([&] { delinearize(short_pair, g); }) == ErrorCode::MalformedStream);

  // Production of the wrong nonterminal.
  TokenStream wrong{step(g, "numeral", "Numeral"), Token::step(g.nonterminal_index("bits"),
                                                               g.production_index("Numeral")),
                    Token::pop(), Token::pop()};
  CHECK(code_of([&] { delinearize(wrong, g); }) == ErrorCode::MalformedStream);

  CHECK(code_of([&] { parse_stream(g, "P:Numeral P:Nope POP POP"); }) ==
        ErrorCode::MalformedStream);
  CHECK(code_of([&] { parse_stream(g, "P:Numeral x"); }) == ErrorCode::MalformedStream);
}

TEST_CASE("corpus line format") {
  const auto& g = gen::numeral();
  auto s = linearize(g, parse_tree(g, "Numeral(Pair(One,Zero))"));
  CHECK(format_stream(g, s) == "P:Numeral P:Pair P:One POP P:Zero POP POP POP");
}

TEST_CASE("aliasing by order of use") {
  const auto& g = gen::minic();
  auto raw = parse_tree(g,
                        "Program(DeclNil,ProcCons(Proc(DeclNil,StmtCons(Incr(x),"
                        "StmtCons(Incr(y),StmtCons(Incr(x),StmtNil)))),ProcNil))");
  auto aliased = alias_variables(raw, g);
  CHECK(to_string(aliased) ==
        "Program(DeclNil,ProcCons(Proc(DeclNil,StmtCons(Incr(Var0),"
        "StmtCons(Incr(Var1),StmtCons(Incr(Var0),StmtNil)))),ProcNil))");
  check_well_formed(g, aliased);

  auto already = parse_tree(g,
                            "Program(DeclCons(Decl(TInt,Var0),DeclCons(Decl(TChar,Var1),DeclNil)),"
                            "ProcCons(Proc(DeclNil,StmtCons(Incr(Var2),StmtCons(Incr(Var3),"
                            "StmtNil))),ProcNil))");
  CHECK(alias_variables(already, g) == already);
}

TEST_CASE("aliasing is idempotent and shape preserving") {
  const auto& g = gen::minic();
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    auto t = gen::random_tree(g, rng, 120);
    auto once = alias_variables(t, g);
    CHECK(alias_variables(once, g) == once);
    std::vector<std::size_t> a, b;
    shape(t, a);
    shape(once, b);
    CHECK(a == b);
  }
}

TEST_CASE("too many variables") {
  const auto& g = gen::minic();
  std::string stmts = "StmtNil";
  for (int i = 0; i < 17; ++i) stmts = "StmtCons(Incr(v" + std::to_string(i) + ")," + stmts + ")";
  auto raw = parse_tree(g, "Program(DeclNil,ProcCons(Proc(DeclNil," + stmts + "),ProcNil))");
  CHECK(code_of([&] { alias_variables(raw, g); }) == ErrorCode::TooManyVariables);
}
