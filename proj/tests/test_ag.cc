#include <random>
#include <string>

#include "doctest.h"
#include "nam/ag/evaluate.h"
#include "nam/ag/validate.h"
#include "nam/error.h"
#include "oracles.h"

using namespace nam;
using namespace nam::ag;
using Kind = ValidationIssue::Kind;

namespace {

const char* kNumeral = R"(
nonterm numeral
nonterm bits
prod Numeral : numeral -> bits
prod Pair    : bits -> bits bits
prod Zero    : bits ->
prod One     : bits ->
attr bits inh positionIn  int
attr bits syn positionOut int
eq Numeral bits.positionIn := 0
eq Pair    bits$2.positionIn := bits$1.positionIn
eq Pair    bits$3.positionIn := bits$2.positionOut
eq Pair    bits$1.positionOut := bits$3.positionOut
eq Zero    bits.positionOut := inc(bits.positionIn)
eq One     bits.positionOut := inc(bits.positionIn)
)";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

std::int64_t position_out(const AttributedTree& at, std::size_t node) {
  return std::get<std::int64_t>(at.value(node, "positionOut"));
}

// Preorder index of each leaf in an attributed numeral tree.
std::vector<std::size_t> leaf_nodes(const Grammar& g, const AttributedTree& at) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < at.nodes().size(); ++i) {
    const auto& id = g.production(at.nodes()[i].production).id;
    if (id == "Zero" || id == "One") out.push_back(i);
  }
  return out;
}

const char* kDeclThenUse =
    "Program(DeclCons(Decl(TInt,Var0),DeclNil),"
    "ProcCons(Proc(DeclNil,StmtCons(Assign(Var0,Lit),StmtNil)),ProcNil))";

}  // namespace

TEST_CASE("numeral grammar validates cleanly") {
  auto g = load_grammar(kNumeral);
  auto report = validate_grammar(g);
  CHECK_MESSAGE(report.ok(), report.str());
}

TEST_CASE("shipped grammars validate cleanly") {
  auto r1 = validate_grammar(gen::numeral());
  CHECK_MESSAGE(r1.ok(), r1.str());
  auto r2 = validate_grammar(gen::minic());
  CHECK_MESSAGE(r2.ok(), r2.str());
  CHECK(gen::minic().production_count() == 42);
}

TEST_CASE("right-to-left dependency is one L-attributedness issue") {
  auto text = replace(kNumeral, "bits$2.positionIn := bits$1.positionIn",
                      "bits$2.positionIn := bits$3.positionOut");
  auto report = validate_grammar(load_grammar(text));
  CHECK(report.issues.size() == 1);
  CHECK(report.count(Kind::NotLAttributed) == 1);
  CHECK(report.issues[0].production == "Pair");
}

TEST_CASE("inherited attribute on the root is one structural issue") {
  auto text = std::string(kNumeral) + "attr numeral inh seed int\n";
  auto report = validate_grammar(load_grammar(text));
  CHECK(report.issues.size() == 1);
  CHECK(report.count(Kind::Structural) == 1);
}

TEST_CASE("missing and duplicate equations are reported") {
  auto missing = replace(kNumeral, "eq Zero    bits.positionOut := inc(bits.positionIn)\n", "");
  auto r1 = validate_grammar(load_grammar(missing));
  CHECK(r1.count(Kind::MissingEquation) == 1);

  auto dup = std::string(kNumeral) + "eq One bits.positionOut := 7\n";
  auto r2 = validate_grammar(load_grammar(dup));
  CHECK(r2.count(Kind::DuplicateEquation) == 1);
}

TEST_CASE("equation kinds are checked") {
  auto bad = replace(kNumeral, "bits.positionIn := 0", "bits.positionIn := true");
  CHECK(validate_grammar(load_grammar(bad)).count(Kind::KindMismatch) == 1);
}

TEST_CASE("loader rejects malformed lines") {
  CHECK_THROWS_AS(load_grammar("prod X : -> y\n"), Error);
  CHECK_THROWS_AS(load_grammar(std::string(kNumeral) + "eq Pair bits$2.positionIn := inc(\n"),
                  Error);
  try {
    load_grammar("bogus directive\n");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GrammarParse);
  }
}

TEST_CASE("numeral threading on a fixed tree") {
  const auto& g = gen::numeral();
  auto t = parse_tree(g, "Numeral(Pair(Pair(One,Zero),One))");
  auto at = evaluate_attributes(g, t);
  auto leaves = leaf_nodes(g, at);
  REQUIRE(leaves.size() == 3);
  CHECK(position_out(at, leaves[0]) == 1);
  CHECK(position_out(at, leaves[1]) == 2);
  CHECK(position_out(at, leaves[2]) == 3);
  CHECK(position_out(at, 1) == 3);  // the bits occurrence under the root
  CHECK(at.entries() == t.node_count());
  CHECK(at.exits() == t.node_count());
}

TEST_CASE("single leaf numeral") {
  const auto& g = gen::numeral();
  auto at = evaluate_attributes(g, parse_tree(g, "Numeral(One)"));
  CHECK(position_out(at, 1) == 1);
}

TEST_CASE("random numerals: leaf k has positionOut k") {
  const auto& g = gen::numeral();
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    int k = 1 + static_cast<int>(rng() % 31);
    auto t = gen::random_numeral(k, rng);
    auto at = evaluate_attributes(g, t);
    auto leaves = leaf_nodes(g, at);
    REQUIRE(leaves.size() == oracle::leaves(t).size());
    for (std::size_t j = 0; j < leaves.size(); ++j) {
      CHECK(position_out(at, leaves[j]) == static_cast<std::int64_t>(j + 1));
    }
  }
}

TEST_CASE("evaluation is deterministic") {
  const auto& g = gen::minic();
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    auto t = gen::random_tree(g, rng, 80);
    auto a = evaluate_attributes(g, t);
    auto b = evaluate_attributes(g, t);
    REQUIRE(a.nodes().size() == b.nodes().size());
    for (std::size_t n = 0; n < a.nodes().size(); ++n) {
      CHECK(a.nodes()[n].values == b.nodes()[n].values);
    }
  }
}

TEST_CASE("mismatched production is a malformed tree") {
  const auto& g = gen::numeral();
  AstTree t{"numeral", "Numeral", {{"bits", "Numeral", {{"bits", "One", {}}}}}};
  try {
    evaluate_attributes(g, t);
    FAIL("expected MalformedTree");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedTree);
  }
}

TEST_CASE("a non-L-attributed grammar cannot read unset attributes silently") {
  auto text = replace(kNumeral, "bits$2.positionIn := bits$1.positionIn",
                      "bits$2.positionIn := bits$3.positionOut");
  auto g = load_grammar(text);
  auto t = parse_tree(g, "Numeral(Pair(One,Zero))");
  try {
    evaluate_attributes(g, t);
    FAIL("expected EvaluationFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EvaluationFailure);
  }
}

TEST_CASE("mini-C: declaration before use is legal") {
  const auto& g = gen::minic();
  auto t = parse_tree(g, kDeclThenUse);
  check_well_formed(g, t);
  CHECK(check_tree(g, t, ConstraintId::DeclaredVariable).empty());
  CHECK(check_tree(g, t, ConstraintId::TypesafeVariable).empty());
}

TEST_CASE("mini-C: undeclared use is one violation at the use") {
  const auto& g = gen::minic();
  auto t = parse_tree(
      g, "Program(DeclNil,ProcCons(Proc(DeclNil,StmtCons(Incr(Var3),StmtNil)),ProcNil))");
  auto v = check_tree(g, t, ConstraintId::DeclaredVariable);
  REQUIRE(v.size() == 1);
  CHECK(v[0].path == std::vector<int>{1, 0, 1, 0, 0});
  CHECK(v[0].constraint == ConstraintId::DeclaredVariable);
  CHECK(check_tree(g, t, ConstraintId::TypesafeVariable).empty());
}

TEST_CASE("mini-C: type mismatch in a typed position") {
  const auto& g = gen::minic();
  auto t = parse_tree(g,
                      "Program(DeclCons(Decl(TInt,Var0),DeclCons(Decl(TFloat,Var1),DeclNil)),"
                      "ProcCons(Proc(DeclNil,StmtCons(Assign(Var0,Add(Lit,Use(Var1))),StmtNil)),"
                      "ProcNil))");
  CHECK(check_tree(g, t, ConstraintId::DeclaredVariable).empty());
  auto v = check_tree(g, t, ConstraintId::TypesafeVariable);
  REQUIRE(v.size() == 1);
  CHECK(v[0].path == std::vector<int>{1, 0, 1, 0, 1, 1, 0});
}

TEST_CASE("mini-C: locals do not escape their procedure") {
  const auto& g = gen::minic();
  auto t = parse_tree(g,
                      "Program(DeclNil,ProcCons(Proc(DeclCons(Decl(TInt,Var0),DeclNil),StmtNil),"
                      "ProcCons(Proc(DeclNil,StmtCons(Incr(Var0),StmtNil)),ProcNil)))");
  CHECK(check_tree(g, t, ConstraintId::DeclaredVariable).size() == 1);
}

TEST_CASE("unknown constraint for a grammar without rules") {
  const auto& g = gen::numeral();
  try {
    check_tree(g, parse_tree(g, "Numeral(One)"), ConstraintId::DeclaredVariable);
    FAIL("expected UnknownConstraint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownConstraint);
  }
}

TEST_CASE("check_tree agrees with the brute-force walker on random trees") {
  const auto& g = gen::minic();
  std::mt19937_64 rng(2024);
  int with_violations = 0;
  for (int i = 0; i < 400; ++i) {
    auto t = gen::random_tree(g, rng, 20 + static_cast<int>(rng() % 120));
    if (t.node_count() > 200) continue;
    for (auto c : {ConstraintId::DeclaredVariable, ConstraintId::TypesafeVariable}) {
      auto got = check_tree(g, t, c);
      auto want = oracle::minic_violations(t, c);
      REQUIRE(got.size() == want.size());
      for (std::size_t j = 0; j < got.size(); ++j) CHECK(got[j].path == want[j]);
      with_violations += !got.empty();
    }
  }
  CHECK(with_violations > 0);
}
