#include "nam/ag/validate.h"

#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace nam::ag {

const char* issue_kind_name(ValidationIssue::Kind kind) {
  switch (kind) {
    case ValidationIssue::Kind::Structural: return "structural";
    case ValidationIssue::Kind::UnknownReference: return "unknown-reference";
    case ValidationIssue::Kind::NotLAttributed: return "not-l-attributed";
    case ValidationIssue::Kind::MissingEquation: return "missing-equation";
    case ValidationIssue::Kind::DuplicateEquation: return "duplicate-equation";
    case ValidationIssue::Kind::KindMismatch: return "kind-mismatch";
  }
  return "?";
}

std::size_t ValidationReport::count(ValidationIssue::Kind kind) const {
  std::size_t n = 0;
  for (const auto& i : issues) n += (i.kind == kind);
  return n;
}

std::string ValidationReport::str() const {
  std::ostringstream out;
  for (const auto& i : issues) {
    out << i.line << ": " << issue_kind_name(i.kind) << ": ";
    if (!i.production.empty()) out << i.production << ": ";
    out << i.message << "\n";
  }
  return out.str();
}

namespace {

using Kind = ValidationIssue::Kind;

class Validator {
 public:
  explicit Validator(const Grammar& g) : g_(g) {}

  ValidationReport run() {
    check_symbols();
    check_attributes();
    check_reachability();
    for (const auto& p : g_.productions()) check_production(p);
    return std::move(report_);
  }

 private:
  void add(Kind kind, const std::string& production, int line, std::string message) {
    report_.issues.push_back({kind, production, line, std::move(message)});
  }

  const AttributeDecl* decl_of(const Production& p, const AttrRef& ref) const {
    if (ref.occurrence < 0 || ref.slot < 0) return nullptr;
    return g_.attributes_of(g_.occurrence_symbol(p, ref.occurrence))[ref.slot];
  }

  void check_symbols() {
    if (!g_.is_nonterminal(g_.root())) {
      add(Kind::Structural, "", 0, "root '" + g_.root() + "' is not a nonterminal");
    }
    std::set<std::string> ids;
    for (const auto& p : g_.productions()) {
      if (!ids.insert(p.id).second) {
        add(Kind::Structural, p.id, p.line, "duplicate production identifier");
      }
      if (!g_.is_nonterminal(p.lhs)) {
        add(Kind::Structural, p.id, p.line, "left-hand side '" + p.lhs + "' is not a nonterminal");
      }
    }
  }

  void check_attributes() {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& d : g_.attribute_decls()) {
      if (!seen.insert({d.symbol, d.name}).second) {
        add(Kind::Structural, "", d.line, "attribute " + d.symbol + "." + d.name + " declared twice");
      }
      if (!g_.is_nonterminal(d.symbol) && !g_.is_terminal(d.symbol)) {
        add(Kind::Structural, "", d.line, "attribute on unknown symbol '" + d.symbol + "'");
      }
      if (d.symbol == g_.root() && d.direction == Direction::Inherited) {
        add(Kind::Structural, "", d.line,
            "root symbol '" + d.symbol + "' must not have inherited attribute '" + d.name + "'");
      }
      if (g_.is_terminal(d.symbol) && d.direction == Direction::Synthesized) {
        add(Kind::Structural, "", d.line,
            "terminal '" + d.symbol + "' must not have synthesized attribute '" + d.name + "'");
      }
    }
  }

  void check_reachability() {
    int root = g_.root_index();
    if (root < 0) return;
    std::vector<bool> seen(g_.nonterminal_count(), false);
    std::vector<int> work{root};
    seen[root] = true;
    while (!work.empty()) {
      int n = work.back();
      work.pop_back();
      if (g_.productions_of(n).empty()) {
        add(Kind::Structural, "", 0,
            "reachable nonterminal '" + g_.nonterminals()[n] + "' has no productions");
      }
      for (int pi : g_.productions_of(n)) {
        for (int c : g_.production(pi).child_nonterminals) {
          if (!seen[c]) {
            seen[c] = true;
            work.push_back(c);
          }
        }
      }
    }
  }

  bool is_output(const Production& p, const AttrRef& ref) const {
    const auto* d = decl_of(p, ref);
    if (!d) return false;
    return ref.occurrence == 0 ? d->direction == Direction::Synthesized
                               : d->direction == Direction::Inherited;
  }

  bool check_ref(const Production& p, const AttrRef& ref, int line) {
    if (ref.occurrence < 0) {
      add(Kind::UnknownReference, p.id, line, "no occurrence matches '" + ref.text + "'");
      return false;
    }
    if (ref.slot < 0) {
      add(Kind::UnknownReference, p.id, line,
          "symbol '" + ref.symbol + "' has no attribute '" + ref.attr + "'");
      return false;
    }
    return true;
  }

  std::optional<ValueKind> infer(const Production& p, const Expr& e, int line) {
    switch (e.kind) {
      case Expr::Kind::Literal:
        return kind_of(e.literal);
      case Expr::Kind::Ref: {
        const auto* d = decl_of(p, e.ref);
        if (!d) return std::nullopt;
        return d->kind;
      }
      case Expr::Kind::Call: {
        const FunctionSig* sig = find_function(e.function);
        if (!sig) {
          add(Kind::UnknownReference, p.id, line, "unknown function '" + e.function + "'");
          return std::nullopt;
        }
        if (e.args.size() != sig->params.size()) {
          add(Kind::KindMismatch, p.id, line,
              e.function + " expects " + std::to_string(sig->params.size()) + " argument(s)");
          return sig->result;
        }
        std::vector<std::optional<ValueKind>> kinds;
        for (const auto& a : e.args) kinds.push_back(infer(p, a, line));
        if (sig->same_kind_args) {
          if (kinds[0] && kinds[1] && *kinds[0] != *kinds[1]) {
            add(Kind::KindMismatch, p.id, line, e.function + " compares different kinds");
          }
        } else {
          for (std::size_t i = 0; i < kinds.size(); ++i) {
            if (kinds[i] && *kinds[i] != sig->params[i]) {
              add(Kind::KindMismatch, p.id, line,
                  e.function + " argument " + std::to_string(i + 1) + " must be " +
                      kind_name(sig->params[i]) + ", got " + kind_name(*kinds[i]));
            }
          }
        }
        return sig->result;
      }
    }
    return std::nullopt;
  }

  void check_production(const Production& p) {
    // (occurrence, slot) -> number of defining equations
    std::map<std::pair<int, int>, int> defined;

    for (const auto& eq : p.equations) {
      bool target_ok = check_ref(p, eq.target, eq.line);
      if (target_ok && !is_output(p, eq.target)) {
        add(Kind::Structural, p.id, eq.line,
            "'" + eq.target.text + "' is an input attribute and cannot be defined here");
        target_ok = false;
      }
      if (target_ok) {
        int& n = ++defined[{eq.target.occurrence, eq.target.slot}];
        if (n == 2) {
          add(Kind::DuplicateEquation, p.id, eq.line,
              "more than one equation defines '" + eq.target.text + "'");
        }
      }

      for (const AttrRef* dep : eq.dependencies()) {
        if (!check_ref(p, *dep, eq.line)) continue;
        if (is_output(p, *dep)) {
          add(Kind::NotLAttributed, p.id, eq.line,
              "'" + eq.target.text + "' depends on output attribute '" + dep->text + "'");
          continue;
        }
        // Inherited attribute of X_i may only read inherited attributes of X_0
        // and synthesized attributes of X_1..X_{i-1}.
        if (target_ok && eq.target.occurrence > 0 && dep->occurrence >= eq.target.occurrence) {
          add(Kind::NotLAttributed, p.id, eq.line,
              "'" + eq.target.text + "' depends on '" + dep->text +
                  "', which is not to its left");
        }
      }

      auto kind = infer(p, eq.expr, eq.line);
      if (target_ok && kind) {
        const auto* d = decl_of(p, eq.target);
        if (*kind != d->kind) {
          add(Kind::KindMismatch, p.id, eq.line,
              "'" + eq.target.text + "' is " + kind_name(d->kind) + " but its equation yields " +
                  kind_name(*kind));
        }
      }
    }

    // Every output attribute occurrence needs exactly one equation.
    for (int occ = 0; occ <= static_cast<int>(p.rhs.size()); ++occ) {
      const std::string& sym = g_.occurrence_symbol(p, occ);
      if (occ == 0 && !g_.is_nonterminal(sym)) continue;
      auto decls = g_.attributes_of(sym);
      for (std::size_t slot = 0; slot < decls.size(); ++slot) {
        bool output = occ == 0 ? decls[slot]->direction == Direction::Synthesized
                               : decls[slot]->direction == Direction::Inherited;
        if (output && !defined.contains({occ, static_cast<int>(slot)})) {
          add(Kind::MissingEquation, p.id, p.line,
              "no equation defines " + sym + "." + decls[slot]->name + " at occurrence X_" +
                  std::to_string(occ));
        }
      }
    }

    for (const auto& rule : p.constraints) {
      std::vector<const AttrRef*> refs;
      rule.expr.collect_refs(refs);
      for (const AttrRef* ref : refs) check_ref(p, *ref, rule.line);
      auto kind = infer(p, rule.expr, rule.line);
      if (kind && *kind != ValueKind::Boolean) {
        add(Kind::KindMismatch, p.id, rule.line, "constraint must be boolean");
      }
    }
  }

  const Grammar& g_;
  ValidationReport report_;
};

}  // namespace

ValidationReport validate_grammar(const Grammar& grammar) {
  return Validator(grammar).run();
}

}  // namespace nam::ag
