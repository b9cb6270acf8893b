#include "nam/machine.h"

#include <algorithm>

#include "nam/error.h"

namespace nam {

/// Per-(grammar, constraint) data derived once from the machine roles.
class MachineTables {
 public:
  MachineTables(const ag::Grammar& g, ConstraintId c) : grammar(&g), constraint(c) {
    const auto& m = g.machine();
    const int np = g.production_count();
    var_nonterminal = m.var_nonterminal;
    types = static_cast<int>(m.type_tags.size());
    var_index.assign(np, -1);
    if (var_nonterminal >= 0) {
      const auto& vs = g.productions_of(var_nonterminal);
      vars = static_cast<int>(vs.size());
      for (int i = 0; i < vars; ++i) var_index[vs[i]] = i;
    }
    type_index.assign(np, -1);
    for (auto [p, t] : m.type_keyword) type_index[p] = t;
    decl_type_child.assign(np, -1);
    decl_var_child.assign(np, -1);
    for (auto [p, d] : m.decl) {
      decl_type_child[p] = d.type_child;
      decl_var_child[p] = d.var_child;
    }
    scope.assign(np, false);
    for (auto [p, on] : m.scope) scope[p] = on;
    pass.assign(np, false);
    for (auto [p, on] : m.pass) pass[p] = on;
    expect.resize(np);
    for (const auto& [p, list] : m.expect) expect[p] = list;
    compute_use_free();
    compute_expectation_free();
  }

  bool is_use_child(int p, int child) const {
    const auto& prod = grammar->production(p);
    return prod.child_nonterminals[child] == var_nonterminal && decl_var_child[p] != child;
  }

  bool has_expect_role(int p, int child) const {
    for (const auto& e : expect[p]) {
      if (e.child == child) return true;
    }
    return false;
  }

  const ag::Grammar* grammar;
  ConstraintId constraint;
  int var_nonterminal = -1;
  int vars = 0;
  int types = 0;
  std::vector<int> var_index;
  std::vector<int> type_index;
  std::vector<int> decl_type_child;
  std::vector<int> decl_var_child;
  std::vector<bool> scope;
  std::vector<bool> pass;
  std::vector<std::vector<ag::MachineBindings::Expect>> expect;
  // use_free[p]: p can be completed without any variable use.
  std::vector<bool> use_free;
  // expectation_free[p]: p can be completed without a variable use that
  // inherits the expectation placed on p's own position.
  std::vector<bool> expectation_free;

 private:
  // Least fixed points over finite derivations.
  template <typename ChildOk>
  std::vector<bool> fixed_point(ChildOk child_ok) {
    const int np = grammar->production_count();
    std::vector<bool> prod_ok(np, false);
    std::vector<bool> nt_ok(grammar->nonterminal_count(), false);
    for (bool changed = true; changed;) {
      changed = false;
      for (int p = 0; p < np; ++p) {
        if (prod_ok[p]) continue;
        const auto& prod = grammar->production(p);
        bool ok = true;
        for (int c = 0; c < prod.arity() && ok; ++c) ok = child_ok(p, c, nt_ok);
        if (ok) {
          prod_ok[p] = true;
          nt_ok[grammar->nonterminal_index(prod.lhs)] = true;
          changed = true;
        }
      }
    }
    return prod_ok;
  }

  void compute_use_free() {
    use_free = fixed_point([this](int p, int c, const std::vector<bool>& nt_ok) {
      if (is_use_child(p, c)) return false;
      return static_cast<bool>(nt_ok[grammar->production(p).child_nonterminals[c]]);
    });
  }

  void compute_expectation_free() {
    expectation_free = fixed_point([this](int p, int c, const std::vector<bool>& nt_ok) {
      if (!pass[p] || has_expect_role(p, c)) return true;
      int child_nt = grammar->production(p).child_nonterminals[c];
      if (child_nt == var_nonterminal) return false;
      return static_cast<bool>(nt_ok[child_nt]);
    });
  }
};

namespace {

[[noreturn]] void inconsistent(const std::string& what) {
  throw Error(ErrorCode::InconsistentStream, what);
}

}  // namespace

ContextState init_context(const ag::Grammar& grammar, ConstraintId constraint) {
  ContextState s;
  s.tables_ = std::make_shared<const MachineTables>(grammar, constraint);
  s.scopes_.emplace_back(s.tables_->vars * s.tables_->types, 0);
  return s;
}

int context_length(const ag::Grammar& grammar, ConstraintId constraint) {
  return init_context(grammar, constraint).vector_length();
}

ConstraintId ContextState::constraint() const { return tables_->constraint; }
const ag::Grammar& ContextState::grammar() const { return *tables_->grammar; }

int ContextState::vector_length() const {
  const auto& t = *tables_;
  if (t.constraint == ConstraintId::DeclaredVariable) return t.vars;
  return t.vars * t.types + t.types;
}

void ContextState::visible_into(std::vector<std::uint8_t>& bits) const {
  bits.assign(tables_->vars * tables_->types, 0);
  for (const auto& s : scopes_) {
    for (std::size_t i = 0; i < s.size(); ++i) bits[i] |= s[i];
  }
}

std::vector<std::uint8_t> ContextState::visible_bindings() const {
  std::vector<std::uint8_t> bits;
  visible_into(bits);
  return bits;
}

int ContextState::declared_count() const {
  auto bits = visible_bindings();
  const int T = tables_->types;
  int n = 0;
  for (int v = 0; v < tables_->vars; ++v) {
    n += std::any_of(bits.begin() + v * T, bits.begin() + (v + 1) * T,
                     [](std::uint8_t b) { return b != 0; });
  }
  return n;
}

int ContextState::unique_type(int var) const {
  const int T = tables_->types;
  int found = -1;
  for (int t = 0; t < T; ++t) {
    bool bound = false;
    for (const auto& s : scopes_) bound = bound || s[var * T + t];
    if (!bound) continue;
    if (found >= 0) return -1;
    found = t;
  }
  return found;
}

int ContextState::child_expectation(const Frame& f, int child) const {
  const auto& t = *tables_;
  for (const auto& e : t.expect[f.production]) {
    if (e.child != child) continue;
    if (e.source_child >= static_cast<int>(f.child_productions.size())) return -1;
    int v = t.var_index[f.child_productions[e.source_child]];
    return v < 0 ? -1 : unique_type(v);
  }
  return t.pass[f.production] ? f.expected : -1;
}

Focus ContextState::focus() const {
  if (complete_) return {};
  const auto& g = *tables_->grammar;
  if (frames_.empty()) return {g.root_index(), false, -1};
  const Frame& top = frames_.back();
  const auto& p = g.production(top.production);
  if (top.next_child >= p.arity()) return {};
  return {p.child_nonterminals[top.next_child], tables_->is_use_child(top.production, top.next_child),
          child_expectation(top, top.next_child)};
}

void ContextState::update(const Token& token) {
  const auto& t = *tables_;
  const auto& g = *t.grammar;
  if (token.is_pop()) {
    if (frames_.empty()) inconsistent("pop with no open node");
    const Frame& top = frames_.back();
    if (top.next_child < g.production(top.production).arity()) {
      inconsistent("pop before all children of " + g.production(top.production).id);
    }
    if (t.scope[top.production]) {
      if (scopes_.size() <= 1) inconsistent("pop of the global scope");
      scopes_.pop_back();
    }
    frames_.pop_back();
    if (frames_.empty()) {
      complete_ = true;
    } else {
      ++frames_.back().next_child;
    }
    return;
  }

  Focus f = focus();
  if (f.nonterminal < 0) inconsistent("step where a pop is required");
  if (token.production < 0 || token.production >= g.production_count() ||
      token.nonterminal != f.nonterminal ||
      g.nonterminal_index(g.production(token.production).lhs) != f.nonterminal) {
    inconsistent("step does not fill a " + g.nonterminals()[f.nonterminal] + " hole");
  }
  if (!frames_.empty()) {
    Frame& parent = frames_.back();
    int pp = parent.production;
    int v = t.var_index[token.production];
    if (v >= 0 && t.decl_var_child[pp] == parent.next_child) {
      int tc = t.decl_type_child[pp];
      if (tc >= 0 && tc < static_cast<int>(parent.child_productions.size())) {
        int ty = t.type_index[parent.child_productions[tc]];
        if (ty >= 0) scopes_.back()[v * t.types + ty] = 1;
      }
    }
    parent.child_productions.push_back(token.production);
  }
  frames_.push_back({token.production, 0, f.expected, {}});
  if (t.scope[token.production]) scopes_.emplace_back(t.vars * t.types, 0);
}

std::vector<std::uint8_t> ContextState::context_vector() const {
  std::vector<std::uint8_t> out(vector_length(), 0);
  const auto& t = *tables_;
  auto bits = visible_bindings();
  if (t.constraint == ConstraintId::DeclaredVariable) {
    for (int v = 0; v < t.vars; ++v) {
      for (int ty = 0; ty < t.types; ++ty) out[v] |= bits[v * t.types + ty];
    }
    return out;
  }
  std::copy(bits.begin(), bits.end(), out.begin());
  Focus f = focus();
  if (f.expected >= 0) out[t.vars * t.types + f.expected] = 1;
  return out;
}

void ContextState::write_context(double* out) const {
  auto v = context_vector();
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
}

bool ContextState::viable(int production, const Focus& at) const {
  const auto& t = *tables_;
  auto bits = visible_bindings();
  const int T = t.types;
  int v = t.var_index[production];
  if (t.constraint == ConstraintId::DeclaredVariable) {
    if (v >= 0 && at.is_use) {
      return std::any_of(bits.begin() + v * T, bits.begin() + (v + 1) * T,
                         [](std::uint8_t b) { return b != 0; });
    }
    if (v >= 0 || t.use_free[production]) return true;
    return std::any_of(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; });
  }
  if (at.expected < 0) return true;
  if (v >= 0 && at.is_use) return bits[v * T + at.expected] != 0;
  if (v >= 0 || t.expectation_free[production]) return true;
  for (int w = 0; w < t.vars; ++w) {
    if (bits[w * T + at.expected]) return true;
  }
  return false;
}

std::vector<int> ContextState::legal_productions(int n) const {
  const auto& g = *tables_->grammar;
  if (n < 0 || n >= g.nonterminal_count()) {
    throw Error(ErrorCode::UnknownNonterminal, "nonterminal index " + std::to_string(n));
  }
  Focus f = focus();
  if (f.nonterminal != n) f = {n, false, -1};
  std::vector<int> out;
  for (int p : g.productions_of(n)) {
    if (viable(p, f)) out.push_back(p);
  }
  return out;
}

bool ContextState::is_legal(int production) const {
  Focus f = focus();
  const auto& g = *tables_->grammar;
  if (f.nonterminal < 0 ||
      g.nonterminal_index(g.production(production).lhs) != f.nonterminal) {
    return false;
  }
  return viable(production, f);
}

bool operator==(const ContextState& a, const ContextState& b) {
  if (a.tables_->grammar != b.tables_->grammar || a.constraint() != b.constraint()) return false;
  if (a.complete_ != b.complete_ || a.scopes_ != b.scopes_) return false;
  if (a.frames_.size() != b.frames_.size()) return false;
  for (std::size_t i = 0; i < a.frames_.size(); ++i) {
    const auto& x = a.frames_[i];
    const auto& y = b.frames_[i];
    if (x.production != y.production || x.next_child != y.next_child ||
        x.expected != y.expected || x.child_productions != y.child_productions) {
      return false;
    }
  }
  return true;
}

Partition partition(const ag::Grammar& grammar, int n, int p_true, const std::vector<int>& legal) {
  if (std::find(legal.begin(), legal.end(), p_true) == legal.end()) {
    throw Error(ErrorCode::IllegalTruth,
                "true production " + grammar.production(p_true).id + " is not legal here");
  }
  Partition out;
  for (int p : grammar.productions_of(n)) {
    if (p == p_true) {
      out.correct.push_back(p);
    } else if (std::find(legal.begin(), legal.end(), p) != legal.end()) {
      out.legal_incorrect.push_back(p);
    } else {
      out.illegal.push_back(p);
    }
  }
  return out;
}

}  // namespace nam
