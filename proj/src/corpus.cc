#include "nam/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>

#include "nam/error.h"
#include "nam/linearizer.h"
#include "nam/machine.h"

namespace nam {

CorpusSpec CorpusSpec::from(const KeyValues& kv) {
  auto unknown = kv.unknown_keys({"programs", "mean_vars", "mean_types", "mean_procs",
                                  "mean_stmts", "holdout", "seed", "max_procs", "max_stmts"});
  if (!unknown.empty()) throw Error(ErrorCode::BadConfig, "unknown corpus spec keys: " + unknown);
  CorpusSpec s;
  s.programs = static_cast<int>(kv.get_int("programs", s.programs));
  s.mean_vars = kv.get_double("mean_vars", s.mean_vars);
  s.mean_types = kv.get_double("mean_types", s.mean_types);
  s.mean_procs = kv.get_double("mean_procs", s.mean_procs);
  s.mean_stmts = kv.get_double("mean_stmts", s.mean_stmts);
  s.holdout = kv.get_double("holdout", s.holdout);
  s.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(s.seed)));
  s.max_procs = static_cast<int>(kv.get_int("max_procs", s.max_procs));
  s.max_stmts = static_cast<int>(kv.get_int("max_stmts", s.max_stmts));
  return s;
}

KeyValues CorpusSpec::to_kv() const {
  KeyValues kv;
  kv.set("programs", std::to_string(programs));
  kv.set("mean_vars", format_double(mean_vars));
  kv.set("mean_types", format_double(mean_types));
  kv.set("mean_procs", format_double(mean_procs));
  kv.set("mean_stmts", format_double(mean_stmts));
  kv.set("holdout", format_double(holdout));
  kv.set("seed", std::to_string(seed));
  kv.set("max_procs", std::to_string(max_procs));
  kv.set("max_stmts", std::to_string(max_stmts));
  return kv;
}

namespace {

const char* kNeeded[] = {"Program", "DeclCons", "DeclNil", "Decl",  "ProcCons", "ProcNil",
                         "Proc",    "StmtCons", "StmtNil", "Assign", "If",      "While",
                         "Return",  "Call",     "Incr",    "Less",   "Equal",   "Add",
                         "Sub",     "Mul",      "Use",     "Lit"};

[[noreturn]] void infeasible(const std::string& what) {
  throw Error(ErrorCode::SpecInfeasible, what);
}

}  // namespace

void CorpusSpec::check(const ag::Grammar& grammar) const {
  for (const char* id : kNeeded) {
    if (grammar.production_index(id) < 0) {
      infeasible(std::string("grammar has no production ") + id);
    }
  }
  const auto& m = grammar.machine();
  int vmax = m.var_nonterminal < 0 ? 0 : static_cast<int>(grammar.productions_of(m.var_nonterminal).size());
  int tmax = static_cast<int>(m.type_tags.size());
  if (programs < 1) infeasible("programs must be at least 1");
  if (!(holdout > 0 && holdout < 1)) infeasible("holdout must lie in (0, 1)");
  auto range = [](const char* what, double mean, int cap) {
    if (!(mean >= 1 && mean <= cap)) {
      infeasible(std::string(what) + " mean " + format_double(mean) + " outside [1, " +
                 std::to_string(cap) + "]");
    }
  };
  range("variable", mean_vars, vmax);
  range("type", mean_types, tmax);
  range("procedure", mean_procs, max_procs);
  range("statement", mean_stmts, max_stmts);
  if (mean_types > mean_vars) infeasible("more types than variables per program");
  if (mean_stmts < mean_procs) infeasible("every procedure needs a statement");
}

TruncatedGeometric::TruncatedGeometric(double mean, int cap) {
  if (cap < 1 || !(mean >= 1 && mean <= cap)) {
    infeasible("mean " + format_double(mean) + " not reachable on [1, " + std::to_string(cap) + "]");
  }
  weights_.assign(cap, 0.0);
  auto fill = [&](double log_r) {
    double top = log_r > 0 ? (cap - 1) * log_r : 0.0;
    double num = 0, den = 0;
    for (int k = 1; k <= cap; ++k) {
      weights_[k - 1] = std::exp((k - 1) * log_r - top);
      den += weights_[k - 1];
      num += k * weights_[k - 1];
    }
    return num / den;
  };
  if (mean <= 1 + 1e-12) {
    weights_[0] = 1;
    ratio_ = 0;
    return;
  }
  if (mean >= cap - 1e-12) {
    weights_.back() = 1;
    ratio_ = INFINITY;
    return;
  }
  double lo = -60, hi = 60;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (fill(mid) < mean ? lo : hi) = mid;
  }
  fill(0.5 * (lo + hi));
  ratio_ = std::exp(0.5 * (lo + hi));
  normalize();
}

void TruncatedGeometric::normalize() {
  double total = 0;
  for (double w : weights_) total += w;
  for (double& w : weights_) w /= total;
}

int TruncatedGeometric::sample(Rng& rng) const { return 1 + rng.weighted(weights_); }

double TruncatedGeometric::mean() const {
  double num = 0, den = 0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    num += (k + 1) * weights_[k];
    den += weights_[k];
  }
  return num / den;
}

TreeMeasures measure(const ag::Grammar& grammar, const AstTree& tree) {
  const auto& m = grammar.machine();
  std::set<std::string> vars, types;
  TreeMeasures out;
  auto visit = [&](auto&& self, const AstTree& t) -> void {
    int p = grammar.production_index(t.production);
    if (m.var_nonterminal >= 0 && grammar.nonterminal_index(t.nonterminal) == m.var_nonterminal) {
      vars.insert(t.production);
    }
    if (p >= 0 && m.type_keyword.count(p)) types.insert(t.production);
    if (p >= 0 && m.scope.count(p) && m.scope.at(p)) ++out.procs;
    if (t.nonterminal == "stmt") ++out.stmts;
    for (const auto& c : t.children) self(self, c);
  };
  visit(visit, tree);
  out.vars = static_cast<int>(vars.size());
  out.types = static_cast<int>(types.size());
  return out;
}

CorpusStats corpus_stats(const ag::Grammar& grammar, const std::vector<AstTree>& trees) {
  CorpusStats s;
  s.count = trees.size();
  if (trees.empty()) return s;
  std::vector<TreeMeasures> ms;
  for (const auto& t : trees) ms.push_back(measure(grammar, t));
  auto moments = [&](auto field, double& mean, double& var) {
    double sum = 0;
    for (const auto& m : ms) sum += m.*field;
    mean = sum / ms.size();
    double sq = 0;
    for (const auto& m : ms) sq += (m.*field - mean) * (m.*field - mean);
    var = sq / ms.size();
  };
  moments(&TreeMeasures::vars, s.mean_vars, s.var_vars);
  moments(&TreeMeasures::types, s.mean_types, s.var_types);
  moments(&TreeMeasures::procs, s.mean_procs, s.var_procs);
  moments(&TreeMeasures::stmts, s.mean_stmts, s.var_stmts);
  return s;
}

namespace {

/// Emits tokens while replaying them through a machine per constraint; a
/// step that either machine rejects is a generator bug.
class Builder {
 public:
  Builder(const ag::Grammar& g, Rng& rng)
      : g_(g),
        rng_(rng),
        cd_(init_context(g, ConstraintId::DeclaredVariable)),
        ct_(init_context(g, ConstraintId::TypesafeVariable)) {}

  void step(int p) {
    if (!cd_.is_legal(p) || !ct_.is_legal(p)) {
      throw std::logic_error("corpus generator chose illegal " + g_.production(p).id);
    }
    Token t = Token::step(g_.nonterminal_index(g_.production(p).lhs), p);
    cd_.update(t);
    ct_.update(t);
    out_.push_back(t);
  }
  void step(const char* id) { step(g_.production_index(id)); }

  void pop() {
    cd_.update(Token::pop());
    ct_.update(Token::pop());
    out_.push_back(Token::pop());
  }

  bool legal(const char* id) const {
    int p = g_.production_index(id);
    return cd_.is_legal(p) && ct_.is_legal(p);
  }

  /// A variable legal under both constraints at the current hole.
  void any_legal_var() {
    int n = cd_.focus().nonterminal;
    auto a = cd_.legal_productions(n);
    auto b = ct_.legal_productions(n);
    std::vector<int> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    if (both.empty()) throw std::logic_error("no legal variable at a use");
    step(both[rng_.below(static_cast<int>(both.size()))]);
    pop();
  }

  const TokenStream& stream() const { return out_; }

 private:
  const ag::Grammar& g_;
  Rng& rng_;
  ContextState cd_;
  ContextState ct_;
  TokenStream out_;
};

int var_cap(const ag::Grammar& g) {
  int n = g.machine().var_nonterminal;
  return n < 0 ? 0 : static_cast<int>(g.productions_of(n).size());
}

/// Count laws for one spec. A program cannot use more types than variables,
/// so the type law is tuned until E[min(types, vars)] meets the target.
struct ShapeLaws {
  TruncatedGeometric procs, vars, types, stmts;

  ShapeLaws(const ag::Grammar& g, const CorpusSpec& spec)
      : procs(spec.mean_procs, spec.max_procs),
        vars(spec.mean_vars, var_cap(g)),
        types(calibrate_types(g, spec, vars)),
        stmts(spec.mean_stmts, spec.max_stmts) {}

  static double realized(const TruncatedGeometric& t, const std::vector<double>& pv) {
    double e = 0;
    for (std::size_t k = 0; k < t.probabilities().size(); ++k) {
      for (std::size_t u = 0; u < pv.size(); ++u) {
        e += t.probabilities()[k] * pv[u] * static_cast<double>(std::min(k, u) + 1);
      }
    }
    return e;
  }

  static TruncatedGeometric calibrate_types(const ag::Grammar& g, const CorpusSpec& spec,
                                            const TruncatedGeometric& vars) {
    const int tmax = static_cast<int>(g.machine().type_tags.size());
    const auto& pv = vars.probabilities();
    if (realized(TruncatedGeometric(tmax, tmax), pv) < spec.mean_types - 1e-9) {
      infeasible("mean types " + format_double(spec.mean_types) +
                 " unreachable with the variable count law");
    }
    double lo = 1, hi = tmax;
    for (int i = 0; i < 100; ++i) {
      double mid = 0.5 * (lo + hi);
      (realized(TruncatedGeometric(mid, tmax), pv) < spec.mean_types ? lo : hi) = mid;
    }
    return TruncatedGeometric(hi, tmax);
  }
};

struct Variable {
  int name = 0;  // index into the variable productions
  int type = 0;  // index into the type keywords
};

class ProgramGenerator {
 public:
  ProgramGenerator(const ag::Grammar& g, const ShapeLaws& laws, Rng& rng)
      : g_(g), laws_(laws), rng_(rng), b_(g, rng) {
    const auto& m = g.machine();
    var_prods_ = g.productions_of(m.var_nonterminal);
    type_prods_.resize(m.type_tags.size());
    for (auto [p, t] : m.type_keyword) type_prods_[t] = p;
  }

  AstTree run() {
    const int tmax = static_cast<int>(type_prods_.size());
    int procs = laws_.procs.sample(rng_);
    int vars = laws_.vars.sample(rng_);
    int types = std::min(vars, laws_.types.sample(rng_));
    int stmts = std::max(procs, laws_.stmts.sample(rng_));

    std::vector<int> palette(tmax);
    for (int i = 0; i < tmax; ++i) palette[i] = i;
    rng_.shuffle(std::span<int>(palette));
    std::vector<int> var_type(vars);
    for (int i = 0; i < vars; ++i) var_type[i] = i < types ? palette[i] : palette[rng_.below(types)];
    rng_.shuffle(std::span<int>(var_type));

    // -1: global, otherwise the owning procedure.
    std::vector<int> home(vars);
    for (int i = 0; i < vars; ++i) home[i] = rng_.chance(0.35) ? -1 : rng_.below(procs);
    bool any_global = std::count(home.begin(), home.end(), -1) > 0;
    if (!any_global) {
      std::vector<bool> has_local(procs, false);
      for (int h : home) has_local[h] = true;
      if (std::count(has_local.begin(), has_local.end(), false) > 0) home[rng_.below(vars)] = -1;
    }

    // Names follow declaration order: globals, then each procedure's locals.
    std::vector<Variable> globals;
    std::vector<std::vector<Variable>> locals(procs);
    int next_name = 0;
    for (int i = 0; i < vars; ++i) {
      if (home[i] == -1) globals.push_back({next_name++, var_type[i]});
    }
    for (int p = 0; p < procs; ++p) {
      for (int i = 0; i < vars; ++i) {
        if (home[i] == p) locals[p].push_back({next_name++, var_type[i]});
      }
    }

    std::vector<int> budget(procs, 1);
    for (int s = procs; s < stmts; ++s) ++budget[rng_.below(procs)];

    b_.step("Program");
    declarations(globals, 0);
    procedures(locals, budget, 0);
    b_.pop();
    return delinearize(b_.stream(), g_);
  }

 private:
  void declarations(const std::vector<Variable>& vs, std::size_t i) {
    if (i == vs.size()) {
      b_.step("DeclNil");
      b_.pop();
      return;
    }
    b_.step("DeclCons");
    b_.step("Decl");
    b_.step(type_prods_[vs[i].type]);
    b_.pop();
    b_.step(var_prods_[vs[i].name]);
    b_.pop();
    b_.pop();
    declarations(vs, i + 1);
    b_.pop();
  }

  void procedures(const std::vector<std::vector<Variable>>& locals, const std::vector<int>& budget,
                  std::size_t i) {
    if (i == locals.size()) {
      b_.step("ProcNil");
      b_.pop();
      return;
    }
    b_.step("ProcCons");
    b_.step("Proc");
    declarations(locals[i], 0);
    statements(budget[i], 0, true);
    b_.pop();
    procedures(locals, budget, i + 1);
    b_.pop();
  }

  void statements(int count, int depth, bool opening) {
    if (count == 0) {
      b_.step("StmtNil");
      b_.pop();
      return;
    }
    b_.step("StmtCons");
    int used = opening ? initial_assignment() : statement(count, depth);
    statements(count - used, depth, false);
    b_.pop();
  }

  // Every procedure starts by assigning a literal to a visible variable.
  int initial_assignment() {
    b_.step("Assign");
    b_.any_legal_var();
    b_.step("Lit");
    b_.pop();
    b_.pop();
    return 1;
  }

  int nested_count(int room) { return 1 + rng_.below(std::min(room, 8)); }

  int statement(int count, int depth) {
    const bool nest = depth < 2 && count >= 2;
    enum { kAssign, kIncr, kReturn, kCall, kIf, kWhile };
    const double w[] = {0.40, 0.12, 0.06, 0.08, nest ? 0.13 : 0.0, nest ? 0.11 : 0.0};
    switch (rng_.weighted(w)) {
      case kAssign:
        b_.step("Assign");
        b_.any_legal_var();
        expression(0);
        b_.pop();
        return 1;
      case kIncr:
        b_.step("Incr");
        b_.any_legal_var();
        b_.pop();
        return 1;
      case kReturn:
        b_.step("Return");
        expression(0);
        b_.pop();
        return 1;
      case kCall:
        b_.step("Call");
        b_.pop();
        return 1;
      case kIf: {
        int inner = nested_count(count - 1);
        int then_n = 1 + rng_.below(inner);
        b_.step("If");
        condition();
        statements(then_n, depth + 1, false);
        statements(inner - then_n, depth + 1, false);
        b_.pop();
        return 1 + inner;
      }
      default: {
        int inner = nested_count(count - 1);
        b_.step("While");
        condition();
        statements(inner, depth + 1, false);
        b_.pop();
        return 1 + inner;
      }
    }
  }

  void condition() {
    b_.step(rng_.chance(0.5) ? "Less" : "Equal");
    b_.any_legal_var();
    expression(0);
    b_.pop();
  }

  void expression(int depth) {
    const double w[] = {0.45, b_.legal("Use") ? 0.40 : 0.0, depth < 2 ? 0.15 : 0.0};
    switch (rng_.weighted(w)) {
      case 0:
        b_.step("Lit");
        b_.pop();
        break;
      case 1:
        b_.step("Use");
        b_.any_legal_var();
        b_.pop();
        break;
      default: {
        static const char* ops[] = {"Add", "Sub", "Mul"};
        b_.step(ops[rng_.below(3)]);
        expression(depth + 1);
        expression(depth + 1);
        b_.pop();
      }
    }
  }

  const ag::Grammar& g_;
  const ShapeLaws& laws_;
  Rng& rng_;
  Builder b_;
  std::vector<int> var_prods_;
  std::vector<int> type_prods_;
};

}  // namespace

AstTree generate_program(const ag::Grammar& grammar, const CorpusSpec& spec, Rng& rng) {
  spec.check(grammar);
  ShapeLaws laws(grammar, spec);
  return ProgramGenerator(grammar, laws, rng).run();
}

std::pair<std::vector<AstTree>, std::vector<AstTree>> split(std::vector<AstTree> trees,
                                                              double fraction,
                                                              std::uint64_t seed) {
  std::vector<std::size_t> order(trees.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, 0x5eed5eedULL));
  rng.shuffle(std::span<std::size_t>(order));
  auto n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(trees.size())));
  std::vector<bool> is_test(trees.size(), false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;
  std::pair<std::vector<AstTree>, std::vector<AstTree>> out;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    (is_test[i] ? out.second : out.first).push_back(std::move(trees[i]));
  }
  return out;
}

Corpus generate_corpus(const ag::Grammar& grammar, const CorpusSpec& spec) {
  spec.check(grammar);
  ShapeLaws laws(grammar, spec);
  std::vector<AstTree> all;
  all.reserve(spec.programs);
  for (int i = 0; i < spec.programs; ++i) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    all.push_back(ProgramGenerator(grammar, laws, rng).run());
  }
  Corpus c;
  std::tie(c.train, c.test) = split(std::move(all), spec.holdout, spec.seed);
  c.spec = spec;
  c.grammar_hash = grammar.hash();
  return c;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

namespace {

std::string lines(const ag::Grammar& g, const std::vector<AstTree>& trees) {
  std::string out;
  for (const auto& t : trees) {
    out += format_stream(g, linearize(g, t));
    out += '\n';
  }
  return out;
}

std::vector<AstTree> read_lines(const ag::Grammar& g, const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<AstTree> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(delinearize(parse_stream(g, line), g));
  }
  return out;
}

}  // namespace

void write_corpus(const std::string& dir, const ag::Grammar& grammar, const Corpus& corpus) {
  std::filesystem::create_directories(dir);
  write_file(dir + "/train.txt", lines(grammar, corpus.train));
  write_file(dir + "/test.txt", lines(grammar, corpus.test));

  KeyValues kv = corpus.spec.to_kv();
  kv.set("grammar", grammar.name());
  kv.set("grammar_hash", hex64(corpus.grammar_hash));
  kv.set("train_count", std::to_string(corpus.train.size()));
  kv.set("test_count", std::to_string(corpus.test.size()));
  std::vector<AstTree> all = corpus.train;
  all.insert(all.end(), corpus.test.begin(), corpus.test.end());
  auto s = corpus_stats(grammar, all);
  kv.set("stat_mean_vars", format_double(s.mean_vars));
  kv.set("stat_mean_types", format_double(s.mean_types));
  kv.set("stat_mean_procs", format_double(s.mean_procs));
  kv.set("stat_mean_stmts", format_double(s.mean_stmts));
  kv.set("stat_var_vars", format_double(s.var_vars));
  kv.set("stat_var_types", format_double(s.var_types));
  kv.set("stat_var_procs", format_double(s.var_procs));
  kv.set("stat_var_stmts", format_double(s.var_stmts));
  kv.set("tool_version", NAM_VERSION);
  kv.save(dir + "/manifest.txt");
}

Corpus read_corpus(const std::string& dir, const ag::Grammar& grammar) {
  auto kv = KeyValues::load(dir + "/manifest.txt");
  if (kv.get("grammar_hash", "") != hex64(grammar.hash())) {
    throw Error(ErrorCode::CorpusGrammarMismatch,
                "corpus " + dir + " was built for grammar hash " + kv.get("grammar_hash", "?") +
                    ", not " + hex64(grammar.hash()));
  }
  KeyValues spec_kv;
  for (const char* k : {"programs", "mean_vars", "mean_types", "mean_procs", "mean_stmts",
                        "holdout", "seed", "max_procs", "max_stmts"}) {
    if (kv.has(k)) spec_kv.set(k, kv.get(k, ""));
  }
  Corpus c;
  c.spec = CorpusSpec::from(spec_kv);
  c.grammar_hash = grammar.hash();
  try {
    c.train = read_lines(grammar, dir + "/train.txt");
    c.test = read_lines(grammar, dir + "/test.txt");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedStream) {
      throw Error(ErrorCode::CorpusGrammarMismatch, std::string("corpus stream: ") + e.what());
    }
    throw;
  }
  return c;
}

}  // namespace nam
