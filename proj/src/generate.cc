#include "nam/generate.h"

#include <sstream>

#include "nam/corpus.h"
#include "nam/error.h"
#include "nam/neural/loss.h"

namespace nam {

LstmPolicy::LstmPolicy(const neural::LstmModel& model)
    : model_(&model), state_(model.zero_state()) {}

void LstmPolicy::reset() { state_ = model_->zero_state(); }

void LstmPolicy::fill_context(const ContextState& state) {
  if (model_->config().context > 0) context_ = state.context_vector();
}

void LstmPolicy::predict(const ContextState& state, int nonterminal, std::vector<double>& out) {
  fill_context(state);
  neural::ModelToken tok{nonterminal, -1, &context_, nullptr};
  model_->step(tok, state_, &logits_);
  out.resize(static_cast<std::size_t>(logits_.size()));
  neural::softmax({logits_.data(), static_cast<std::size_t>(logits_.size())}, out);
}

void LstmPolicy::pop(const ContextState& state) {
  fill_context(state);
  neural::ModelToken tok{-1, -1, &context_, nullptr};
  model_->step(tok, state_, nullptr);
}

GeneratedTree generate_tree(Policy& policy, const ag::Grammar& grammar, ConstraintId constraint,
                            Rng& rng, int node_cap) {
  GeneratedTree out;
  ContextState state = init_context(grammar, constraint);
  policy.reset();
  TokenStream stream;
  std::vector<double> dist, masked;
  while (!state.complete()) {
    Focus f = state.focus();
    if (f.nonterminal < 0) {
      policy.pop(state);
      state.update(Token::pop());
      stream.push_back(Token::pop());
      continue;
    }
    if (out.nodes >= node_cap) return out;
    policy.predict(state, f.nonterminal, dist);
    const auto& choices = grammar.productions_of(f.nonterminal);
    masked.assign(choices.size(), 0.0);
    for (std::size_t i = 0; i < choices.size(); ++i) masked[i] = dist[choices[i]];
    int p = choices[rng.weighted(masked)];
    if (!state.is_legal(p)) ++out.violations;
    Token tok = Token::step(f.nonterminal, p);
    state.update(tok);
    stream.push_back(tok);
    ++out.nodes;
  }
  out.tree = delinearize(stream, grammar);
  return out;
}

long GenerationReport::violations() const {
  long v = 0;
  for (const auto& t : trees) v += t.violations;
  return v;
}

int GenerationReport::legal() const {
  int n = 0;
  for (const auto& t : trees) n += t.legal;
  return n;
}

int GenerationReport::illegal() const {
  int n = 0;
  for (const auto& t : trees) n += t.complete && !t.legal;
  return n;
}

int GenerationReport::incomplete() const {
  int n = 0;
  for (const auto& t : trees) n += !t.complete;
  return n;
}

std::string GenerationReport::text() const {
  std::ostringstream out;
  out << "# model = " << model << "\n# constraint = " << constraint << "\n# seed = " << seed
      << "\n# seed\tnodes\tviolations\tlegal\tcomplete\tvars\tprocs\n";
  for (const auto& t : trees) {
    out << t.seed << '\t' << t.nodes << '\t' << t.violations << '\t' << t.legal << '\t'
        << t.complete << '\t' << t.vars << '\t' << t.procs << '\n';
  }
  out << "total\ttrees=" << trees.size() << "\tlegal=" << legal() << "\tillegal=" << illegal()
      << "\tincomplete=" << incomplete() << "\tviolations=" << violations() << '\n';
  return out.str();
}

GenerationReport GenerationReport::parse(const std::string& text) {
  GenerationReport r;
  std::istringstream in(text);
  std::string line;
  bool footer = false;
  auto bad = [](const std::string& what) { throw Error(ErrorCode::MalformedStream, what); };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find(" = ");
      if (eq == std::string::npos) continue;
      std::string key = line.substr(2, eq - 2), value = line.substr(eq + 3);
      if (key == "model") r.model = value;
      else if (key == "constraint") r.constraint = value;
      else if (key == "seed") r.seed = std::stoull(value);
      continue;
    }
    if (line.rfind("total", 0) == 0) {
      std::ostringstream expected;
      expected << "total\ttrees=" << r.trees.size() << "\tlegal=" << r.legal()
               << "\tillegal=" << r.illegal() << "\tincomplete=" << r.incomplete()
               << "\tviolations=" << r.violations();
      if (line != expected.str()) bad("report footer disagrees with its tree lines");
      footer = true;
      continue;
    }
    std::istringstream fields(line);
    TreeRecord t;
    int legal = 0, complete = 0;
    if (!(fields >> t.seed >> t.nodes >> t.violations >> legal >> complete >> t.vars >> t.procs)) {
      bad("report line: " + line);
    }
    t.legal = legal != 0;
    t.complete = complete != 0;
    if (t.legal && (!t.complete || t.violations != 0)) bad("legal flag inconsistent: " + line);
    r.trees.push_back(t);
  }
  if (!footer) bad("report has no footer");
  return r;
}

GenerationReport sample_batch(Policy& policy, const ag::Grammar& grammar, ConstraintId constraint,
                              int count, std::uint64_t seed, int node_cap,
                              std::vector<AstTree>* trees) {
  GenerationReport r;
  r.constraint = constraint_short_name(constraint);
  r.seed = seed;
  for (int i = 0; i < count; ++i) {
    TreeRecord rec;
    rec.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    Rng rng(rec.seed);
    GeneratedTree g = generate_tree(policy, grammar, constraint, rng, node_cap);
    rec.nodes = g.nodes;
    rec.violations = g.violations;
    rec.complete = g.complete();
    rec.legal = g.legal();
    if (g.tree) {
      TreeMeasures m = measure(grammar, *g.tree);
      rec.vars = m.vars;
      rec.procs = m.procs;
      if (trees) trees->push_back(std::move(*g.tree));
    }
    r.trees.push_back(rec);
  }
  return r;
}

}  // namespace nam
