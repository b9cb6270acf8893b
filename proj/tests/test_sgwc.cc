#include <cmath>

#include "doctest.h"
#include "nam/corpus.h"
#include "nam/error.h"
#include "nam/sgwc.h"
#include "oracles.h"

using namespace nam;

namespace {

const std::vector<TokenStream>& streams() {
  static const std::vector<TokenStream> s = [] {
    CorpusSpec spec;
    spec.programs = 25;
    spec.seed = 4;
    auto corpus = generate_corpus(gen::minic(), spec);
    std::vector<TokenStream> out;
    for (const auto& t : corpus.train) out.push_back(linearize(gen::minic(), t));
    return out;
  }();
  return s;
}

// Calls f(state, token) before every step of every stream.
template <typename F>
void each_step(ConstraintId c, F&& f) {
  for (const auto& stream : streams()) {
    ContextState state = init_context(gen::minic(), c);
    for (const Token& tok : stream) {
      if (!tok.is_pop()) f(state, tok);
      state.update(tok);
    }
  }
}

}  // namespace

TEST_CASE("single prediction gives a single count") {
  const auto& g = gen::minic();
  Sgwc model(g, ConstraintId::DeclaredVariable);
  int root = g.root_index();
  int p = g.productions_of(root).front();
  model.observe({Token::step(root, p)});
  auto k = Sgwc::key(init_context(g, ConstraintId::DeclaredVariable));
  CHECK(model.count(root, k, p) == 1);
  CHECK(model.total_count() == 1);
  CHECK(model.cells() == 1);
}

TEST_CASE("fit is deterministic and counts every step") {
  for (auto c : {ConstraintId::DeclaredVariable, ConstraintId::TypesafeVariable}) {
    Sgwc a(gen::minic(), c), b(gen::minic(), c);
    a.fit(streams());
    b.fit(streams());
    CHECK(a.table() == b.table());
    long steps = 0;
    for (const auto& s : streams()) steps += static_cast<long>(prediction_count(s));
    CHECK(a.total_count() == steps);
  }
}

TEST_CASE("predictions are supported on the legal set") {
  for (auto c : {ConstraintId::DeclaredVariable, ConstraintId::TypesafeVariable}) {
    Sgwc model(gen::minic(), c);
    model.fit(streams());
    each_step(c, [&](const ContextState& s, const Token& tok) {
      auto p = model.predict(s, tok.nonterminal);
      auto legal = s.legal_productions(tok.nonterminal);
      double sum = 0;
      for (int k = 0; k < static_cast<int>(p.size()); ++k) {
        if (std::find(legal.begin(), legal.end(), k) == legal.end()) {
          CHECK(p[k] == 0.0);
        } else {
          CHECK(p[k] > 0);
        }
        sum += p[k];
      }
      CHECK(std::abs(sum - 1) < 1e-12);
    });
  }
}

TEST_CASE("unseen keys fall back to uniform over the legal set") {
  const auto& g = gen::minic();
  Sgwc empty(g, ConstraintId::TypesafeVariable);
  each_step(ConstraintId::TypesafeVariable, [&](const ContextState& s, const Token& tok) {
    auto legal = s.legal_productions(tok.nonterminal);
    auto p = empty.predict(s, tok.nonterminal);
    for (int k : legal) CHECK(p[k] == doctest::Approx(1.0 / legal.size()).epsilon(1e-15));
  });
  CHECK_THROWS_AS(empty.predict(init_context(g, ConstraintId::TypesafeVariable), 99), Error);
}

TEST_CASE("add-one smoothing arithmetic") {
  const auto& g = gen::minic();
  const auto c = ConstraintId::DeclaredVariable;
  bool found = false;
  each_step(c, [&](const ContextState& s, const Token& tok) {
    auto legal = s.legal_productions(tok.nonterminal);
    if (found || legal.size() != 2) return;
    found = true;
    Sgwc model(g, c, 1.0);
    std::string bits = Sgwc::key(s);
    model.read_table(g.nonterminals()[tok.nonterminal] + " " + (bits.empty() ? "-" : bits) + " " +
                     g.production(legal[0]).id + " 2\n");
    auto p = model.predict(s, tok.nonterminal);
    CHECK(p[legal[0]] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(p[legal[1]] == doctest::Approx(0.25).epsilon(1e-15));
  });
  CHECK(found);
}

TEST_CASE("alpha 0 reproduces empirical frequencies") {
  const auto c = ConstraintId::TypesafeVariable;
  Sgwc model(gen::minic(), c, 0.0);
  model.fit(streams());
  each_step(c, [&](const ContextState& s, const Token& tok) {
    auto k = Sgwc::key(s);
    long total = 0;
    for (int p : gen::minic().productions_of(tok.nonterminal)) total += model.count(tok.nonterminal, k, p);
    auto dist = model.predict(s, tok.nonterminal);
    for (int p : gen::minic().productions_of(tok.nonterminal)) {
      CHECK(dist[p] == doctest::Approx(static_cast<double>(model.count(tok.nonterminal, k, p)) / total)
                           .epsilon(1e-15));
    }
  });
  CHECK(std::isfinite(model.nll(streams())));
}

TEST_CASE("deterministic cells give zero likelihood loss") {
  const auto& g = gen::minic();
  const auto c = ConstraintId::DeclaredVariable;
  TokenStream one = streams().front();
  Sgwc model(g, c, 0.0);
  model.observe(one);
  // Every key seen with a single production contributes 0; the rest are
  // bounded by the empirical entropy.
  double nll = model.nll({one});
  CHECK(nll >= 0);
  double expected = 0;
  long n = 0;
  ContextState s = init_context(g, c);
  for (const Token& tok : one) {
    if (!tok.is_pop()) {
      auto k = Sgwc::key(s);
      long total = 0;
      for (int p : g.productions_of(tok.nonterminal)) total += model.count(tok.nonterminal, k, p);
      expected -= std::log(static_cast<double>(model.count(tok.nonterminal, k, tok.production)) / total);
      ++n;
    }
    s.update(tok);
  }
  CHECK(nll == doctest::Approx(expected / n).epsilon(1e-12));
}

TEST_CASE("count table round trip") {
  Sgwc a(gen::minic(), ConstraintId::TypesafeVariable);
  a.fit(streams());
  Sgwc b(gen::minic(), ConstraintId::TypesafeVariable);
  b.read_table(a.table());
  CHECK(b.table() == a.table());
  CHECK(b.total_count() == a.total_count());
  CHECK(b.nll(streams()) == a.nll(streams()));
  CHECK_THROWS_AS(b.read_table("stmt 0101 Nope 3\n"), Error);
  CHECK_THROWS_AS(b.read_table("stmt 0101\n"), Error);
}
