#include "nam/ag/grammar.h"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nam/error.h"

namespace nam::ag {

void Expr::collect_refs(std::vector<const AttrRef*>& out) const {
  switch (kind) {
    case Kind::Ref:
      out.push_back(&ref);
      break;
    case Kind::Literal:
      break;
    case Kind::Call:
      for (const auto& a : args) a.collect_refs(out);
      break;
  }
}

std::vector<const AttrRef*> AttributeEquation::dependencies() const {
  std::vector<const AttrRef*> out;
  expr.collect_refs(out);
  return out;
}

int Grammar::nonterminal_index(const std::string& name) const {
  auto it = nonterminal_index_.find(name);
  return it == nonterminal_index_.end() ? -1 : it->second;
}

int Grammar::production_index(const std::string& id) const {
  auto it = production_index_.find(id);
  return it == production_index_.end() ? -1 : it->second;
}

const std::vector<int>& Grammar::productions_of(int nonterminal) const {
  if (nonterminal < 0 || nonterminal >= nonterminal_count()) {
    throw Error(ErrorCode::UnknownNonterminal,
                "nonterminal index " + std::to_string(nonterminal) + " out of range");
  }
  return productions_of_[nonterminal];
}

bool Grammar::is_nonterminal(const std::string& symbol) const {
  return nonterminal_index_.contains(symbol);
}

bool Grammar::is_terminal(const std::string& symbol) const {
  return std::find(terminals_.begin(), terminals_.end(), symbol) != terminals_.end();
}

std::vector<const AttributeDecl*> Grammar::attributes_of(const std::string& symbol) const {
  std::vector<const AttributeDecl*> out;
  auto it = attributes_by_symbol_.find(symbol);
  if (it == attributes_by_symbol_.end()) return out;
  for (int i : it->second) out.push_back(&attributes_[i]);
  return out;
}

const AttributeDecl* Grammar::find_attribute(const std::string& symbol,
                                             const std::string& name) const {
  for (const auto* decl : attributes_of(symbol)) {
    if (decl->name == name) return decl;
  }
  return nullptr;
}

int Grammar::attribute_slot(const std::string& symbol, const std::string& name) const {
  auto decls = attributes_of(symbol);
  for (std::size_t i = 0; i < decls.size(); ++i) {
    if (decls[i]->name == name) return static_cast<int>(i);
  }
  return -1;
}

bool Grammar::has_constraint(ConstraintId id) const {
  for (const auto& p : productions_) {
    for (const auto& c : p.constraints) {
      if (c.id == id) return true;
    }
  }
  return false;
}

const std::string& Grammar::occurrence_symbol(const Production& p, int occ) const {
  return occ == 0 ? p.lhs : p.rhs.at(occ - 1);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Loader

class GrammarBuilder {
 public:
  GrammarBuilder(const std::string& text, const std::string& name) {
    g_.name_ = name;
    g_.source_ = text;
    g_.hash_ = fnv1a64(text);
  }

  Grammar build();

 private:
  struct Line {
    int number;
    std::vector<std::string> words;
    std::string rest_after_assign;  // expression text after ":="
  };

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw Error(ErrorCode::GrammarParse,
                g_.name_ + ":" + std::to_string(line) + ": " + msg);
  }

  void declare_symbols(const std::vector<Line>& lines);
  void attach_rules(const std::vector<Line>& lines);
  void resolve(Production& p, AttrRef& ref) const;
  void resolve_expr(Production& p, Expr& e) const;
  int child_of(const Production& p, const std::string& occ_text, int line) const;
  Production& production_for(const std::string& id, int line);
  Expr parse_expr(const std::string& text, int line) const;

  Grammar g_;
};

namespace {

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

/// Splits `sym$k` into (sym, k); k = 0 when no suffix is present.
std::pair<std::string, int> split_occurrence(const std::string& text) {
  auto dollar = text.find('$');
  if (dollar == std::string::npos) return {text, 0};
  int k = 0;
  try {
    k = std::stoi(text.substr(dollar + 1));
  } catch (...) {
    k = -1;
  }
  return {text.substr(0, dollar), k <= 0 ? -1 : k};
}

class ExprParser {
 public:
  ExprParser(const std::string& text, const std::vector<std::string>& type_tags)
      : s_(text), tags_(type_tags) {}

  Expr parse() {
    Expr e = expr();
    skip_ws();
    if (pos_ != s_.size()) throw std::runtime_error("trailing text '" + s_.substr(pos_) + "'");
    return e;
  }

 private:
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
  void expect(char c) {
    if (!accept(c)) throw std::runtime_error(std::string("expected '") + c + "'");
  }
  std::string ident() {
    skip_ws();
    if (pos_ >= s_.size() || !is_ident_start(s_[pos_])) {
      throw std::runtime_error("expected identifier at '" + s_.substr(pos_) + "'");
    }
    std::size_t start = pos_;
    while (pos_ < s_.size() && is_ident_char(s_[pos_])) ++pos_;
    return s_.substr(start, pos_ - start);
  }

  Expr expr() {
    skip_ws();
    if (pos_ >= s_.size()) throw std::runtime_error("unexpected end of expression");
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-') {
      std::size_t start = pos_++;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      Expr e;
      e.kind = Expr::Kind::Literal;
      e.literal = static_cast<std::int64_t>(std::stoll(s_.substr(start, pos_ - start)));
      return e;
    }
    if (c == '{') {
      ++pos_;
      SymbolSet set;
      if (!accept('}')) {
        do {
          set.insert(ident());
        } while (accept(','));
        expect('}');
      }
      Expr e;
      e.kind = Expr::Kind::Literal;
      e.literal = std::move(set);
      return e;
    }
    std::string word = ident();
    if (pos_ < s_.size() && (s_[pos_] == '$' || s_[pos_] == '.')) {
      std::string text = word;
      if (s_[pos_] == '$') {
        std::size_t start = pos_++;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        text += s_.substr(start, pos_ - start);
      }
      if (pos_ >= s_.size() || s_[pos_] != '.') {
        throw std::runtime_error("expected '.' in attribute reference '" + text + "'");
      }
      ++pos_;
      std::string attr = ident();
      Expr e;
      e.kind = Expr::Kind::Ref;
      auto [sym, k] = split_occurrence(text);
      e.ref.text = text + "." + attr;
      e.ref.symbol = sym;
      e.ref.attr = attr;
      // Occurrence number is stashed in `occurrence` until resolution.
      e.ref.occurrence = k;
      return e;
    }
    if (accept('(')) {
      Expr e;
      e.kind = Expr::Kind::Call;
      e.function = word;
      if (!accept(')')) {
        do {
          e.args.push_back(expr());
        } while (accept(','));
        expect(')');
      }
      return e;
    }
    Expr e;
    e.kind = Expr::Kind::Literal;
    if (word == "true" || word == "false") {
      e.literal = (word == "true");
    } else if (word == "none") {
      e.literal = TypeTag{};
    } else if (std::find(tags_.begin(), tags_.end(), word) != tags_.end()) {
      e.literal = TypeTag{word};
    } else {
      throw std::runtime_error("unknown literal '" + word + "'");
    }
    return e;
  }

  const std::string& s_;
  const std::vector<std::string>& tags_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr GrammarBuilder::parse_expr(const std::string& text, int line) const {
  try {
    return ExprParser(text, g_.machine_.type_tags).parse();
  } catch (const std::runtime_error& e) {
    fail(line, std::string("bad expression: ") + e.what());
  }
}

Grammar GrammarBuilder::build() {
  std::vector<Line> lines;
  std::istringstream in(g_.source_);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    Line line{number, {}, {}};
    auto assign = raw.find(":=");
    if (assign != std::string::npos) {
      line.rest_after_assign = raw.substr(assign + 2);
      raw.erase(assign);
    }
    line.words = split_words(raw);
    if (line.words.empty()) continue;
    lines.push_back(std::move(line));
  }
  declare_symbols(lines);
  attach_rules(lines);
  return std::move(g_);
}

void GrammarBuilder::declare_symbols(const std::vector<Line>& lines) {
  std::vector<std::string> declared_terms;
  for (const auto& l : lines) {
    const auto& w = l.words;
    const std::string& head = w[0];
    if (head == "nonterm") {
      if (w.size() != 2) fail(l.number, "usage: nonterm <name>");
      if (g_.nonterminal_index_.contains(w[1])) fail(l.number, "duplicate nonterminal '" + w[1] + "'");
      g_.nonterminal_index_[w[1]] = static_cast<int>(g_.nonterminals_.size());
      g_.nonterminals_.push_back(w[1]);
    } else if (head == "term") {
      if (w.size() != 2) fail(l.number, "usage: term <name>");
      declared_terms.push_back(w[1]);
    } else if (head == "root") {
      if (w.size() != 2) fail(l.number, "usage: root <nonterminal>");
      g_.root_ = w[1];
    } else if (head == "types") {
      g_.machine_.type_tags.assign(w.begin() + 1, w.end());
    }
  }
  if (g_.nonterminals_.empty()) fail(0, "grammar declares no nonterminals");
  if (g_.root_.empty()) g_.root_ = g_.nonterminals_.front();
  g_.productions_of_.assign(g_.nonterminals_.size(), {});

  for (const auto& l : lines) {
    const auto& w = l.words;
    if (w[0] == "prod") {
      // prod <id> : <lhs> -> <sym> ...
      if (w.size() < 5 || w[2] != ":" || w[4] != "->") {
        fail(l.number, "usage: prod <id> : <lhs> -> <sym> ...");
      }
      Production p;
      p.id = w[1];
      p.lhs = w[3];
      p.rhs.assign(w.begin() + 5, w.end());
      p.line = l.number;
      int index = static_cast<int>(g_.productions_.size());
      // Duplicate ids are kept so the validator can report them; lookups
      // resolve to the first definition.
      g_.production_index_.try_emplace(p.id, index);
      for (std::size_t i = 0; i < p.rhs.size(); ++i) {
        int nt = g_.nonterminal_index(p.rhs[i]);
        if (nt >= 0) {
          p.child_positions.push_back(static_cast<int>(i) + 1);
          p.child_nonterminals.push_back(nt);
        } else if (std::find(g_.terminals_.begin(), g_.terminals_.end(), p.rhs[i]) ==
                   g_.terminals_.end()) {
          g_.terminals_.push_back(p.rhs[i]);
        }
      }
      int lhs = g_.nonterminal_index(p.lhs);
      if (lhs >= 0) g_.productions_of_[lhs].push_back(index);
      g_.productions_.push_back(std::move(p));
    } else if (w[0] == "attr") {
      // attr <symbol> <inh|syn> <name> <kind>
      if (w.size() != 5) fail(l.number, "usage: attr <symbol> <inh|syn> <name> <kind>");
      AttributeDecl d;
      d.symbol = w[1];
      if (w[2] == "inh") {
        d.direction = Direction::Inherited;
      } else if (w[2] == "syn") {
        d.direction = Direction::Synthesized;
      } else {
        fail(l.number, "attribute direction must be 'inh' or 'syn'");
      }
      d.name = w[3];
      auto kind = parse_kind(w[4]);
      if (!kind) fail(l.number, "unknown attribute kind '" + w[4] + "'");
      d.kind = *kind;
      d.line = l.number;
      g_.attributes_by_symbol_[d.symbol].push_back(static_cast<int>(g_.attributes_.size()));
      g_.attributes_.push_back(std::move(d));
    }
  }
  for (const auto& t : declared_terms) {
    if (!g_.is_terminal(t) && !g_.is_nonterminal(t)) g_.terminals_.push_back(t);
  }
}

Production& GrammarBuilder::production_for(const std::string& id, int line) {
  int index = g_.production_index(id);
  if (index < 0) fail(line, "unknown production '" + id + "'");
  return g_.productions_[index];
}

void GrammarBuilder::resolve(Production& p, AttrRef& ref) const {
  int wanted = ref.occurrence;  // 0 = unnumbered, -1 = malformed, k >= 1
  ref.occurrence = -1;
  std::vector<int> matches;
  for (int occ = 0; occ <= static_cast<int>(p.rhs.size()); ++occ) {
    if (g_.occurrence_symbol(p, occ) == ref.symbol) matches.push_back(occ);
  }
  if (wanted == 0 && matches.size() == 1) {
    ref.occurrence = matches[0];
  } else if (wanted >= 1 && wanted <= static_cast<int>(matches.size())) {
    ref.occurrence = matches[wanted - 1];
  }
  ref.slot = g_.attribute_slot(ref.symbol, ref.attr);
}

void GrammarBuilder::resolve_expr(Production& p, Expr& e) const {
  if (e.kind == Expr::Kind::Ref) resolve(p, e.ref);
  for (auto& a : e.args) resolve_expr(p, a);
}

int GrammarBuilder::child_of(const Production& p, const std::string& occ_text, int line) const {
  auto [sym, k] = split_occurrence(occ_text);
  std::vector<int> matches;
  for (int occ = 0; occ <= static_cast<int>(p.rhs.size()); ++occ) {
    if (g_.occurrence_symbol(p, occ) == sym) matches.push_back(occ);
  }
  int occ = -1;
  if (k == 0 && matches.size() == 1) occ = matches[0];
  if (k >= 1 && k <= static_cast<int>(matches.size())) occ = matches[k - 1];
  if (occ <= 0) fail(line, "'" + occ_text + "' is not a child occurrence of " + p.id);
  auto it = std::find(p.child_positions.begin(), p.child_positions.end(), occ);
  if (it == p.child_positions.end()) fail(line, "'" + occ_text + "' is not a nonterminal child");
  return static_cast<int>(it - p.child_positions.begin());
}

void GrammarBuilder::attach_rules(const std::vector<Line>& lines) {
  auto& mb = g_.machine_;
  for (const auto& l : lines) {
    const auto& w = l.words;
    const std::string& head = w[0];
    if (head == "eq") {
      // eq <prod-id> <occ>.<attr> := <expr>
      if (w.size() != 3 || l.rest_after_assign.empty()) {
        fail(l.number, "usage: eq <prod-id> <occ>.<attr> := <expr>");
      }
      Production& p = production_for(w[1], l.number);
      Expr target = parse_expr(w[2], l.number);
      if (target.kind != Expr::Kind::Ref) fail(l.number, "equation target must be an attribute occurrence");
      AttributeEquation eq;
      eq.target = target.ref;
      eq.expr = parse_expr(l.rest_after_assign, l.number);
      eq.line = l.number;
      resolve(p, eq.target);
      resolve_expr(p, eq.expr);
      p.equations.push_back(std::move(eq));
    } else if (head == "constraint") {
      // constraint <prod-id> <constraint-id> := <expr>
      if (w.size() != 3 || l.rest_after_assign.empty()) {
        fail(l.number, "usage: constraint <prod-id> <constraint-id> := <expr>");
      }
      Production& p = production_for(w[1], l.number);
      auto id = parse_constraint(w[2]);
      if (!id) fail(l.number, "unknown constraint '" + w[2] + "'");
      ConstraintRule rule;
      rule.id = *id;
      rule.expr = parse_expr(l.rest_after_assign, l.number);
      rule.line = l.number;
      resolve_expr(p, rule.expr);
      p.constraints.push_back(std::move(rule));
    } else if (head == "vars") {
      if (w.size() != 2) fail(l.number, "usage: vars <nonterminal>");
      mb.var_nonterminal = g_.nonterminal_index(w[1]);
      if (mb.var_nonterminal < 0) fail(l.number, "unknown nonterminal '" + w[1] + "'");
    } else if (head == "role") {
      if (w.size() < 3) fail(l.number, "usage: role <kind> <prod-id> ...");
      int index = g_.production_index(w[2]);
      if (index < 0) fail(l.number, "unknown production '" + w[2] + "'");
      const Production& p = g_.productions_[index];
      const std::string& kind = w[1];
      if (kind == "typekw" && w.size() == 4) {
        auto it = std::find(mb.type_tags.begin(), mb.type_tags.end(), w[3]);
        if (it == mb.type_tags.end()) fail(l.number, "unknown type tag '" + w[3] + "'");
        mb.type_keyword[index] = static_cast<int>(it - mb.type_tags.begin());
      } else if (kind == "decl" && w.size() == 5) {
        mb.decl[index] = {child_of(p, w[3], l.number), child_of(p, w[4], l.number)};
      } else if (kind == "scope" && w.size() == 3) {
        mb.scope[index] = true;
      } else if (kind == "expect" && w.size() == 5) {
        mb.expect[index].push_back({child_of(p, w[3], l.number), child_of(p, w[4], l.number)});
      } else if (kind == "pass" && w.size() == 3) {
        mb.pass[index] = true;
      } else {
        fail(l.number, "malformed role directive");
      }
    } else if (head != "nonterm" && head != "term" && head != "root" && head != "types" &&
               head != "prod" && head != "attr") {
      fail(l.number, "unknown directive '" + head + "'");
    }
  }
}

Grammar load_grammar(const std::string& text, const std::string& name) {
  return GrammarBuilder(text, name).build();
}

Grammar load_grammar_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open grammar file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_grammar(buf.str(), std::filesystem::path(path).stem().string());
}

}  // namespace nam::ag
