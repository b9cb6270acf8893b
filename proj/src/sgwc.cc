#include "nam/sgwc.h"

#include <cmath>
#include <sstream>

#include "nam/error.h"

namespace nam {

Sgwc::Sgwc(const ag::Grammar& grammar, ConstraintId constraint, double alpha)
    : grammar_(&grammar), constraint_(constraint), alpha_(alpha) {
  if (!(alpha >= 0)) throw Error(ErrorCode::BadConfig, "alpha must be nonnegative");
}

std::string Sgwc::key(const ContextState& state) {
  auto bits = state.context_vector();
  std::string k(bits.size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) k[i] = '1';
  }
  return k;
}

void Sgwc::fit(const std::vector<TokenStream>& streams) {
  for (const auto& s : streams) observe(s);
}

void Sgwc::observe(const TokenStream& stream) {
  ContextState state = init_context(*grammar_, constraint_);
  for (const Token& tok : stream) {
    if (!tok.is_pop()) ++counts_[{tok.nonterminal, key(state)}][tok.production];
    state.update(tok);
  }
}

std::vector<double> Sgwc::predict(const ContextState& state, int nonterminal) const {
  std::vector<int> legal = state.legal_productions(nonterminal);
  std::vector<double> out(grammar_->production_count(), 0.0);
  if (legal.empty()) return out;
  auto cell = counts_.find({nonterminal, key(state)});
  double total = 0;
  if (cell != counts_.end()) {
    for (int p : legal) {
      auto it = cell->second.find(p);
      out[p] = alpha_ + (it == cell->second.end() ? 0 : static_cast<double>(it->second));
      total += out[p];
    }
  }
  if (total <= 0) {
    for (int p : legal) out[p] = 1.0;
    total = static_cast<double>(legal.size());
  }
  for (int p : legal) out[p] /= total;
  return out;
}

double Sgwc::nll(const std::vector<TokenStream>& streams) const {
  double sum = 0;
  long n = 0;
  for (const auto& stream : streams) {
    ContextState state = init_context(*grammar_, constraint_);
    for (const Token& tok : stream) {
      if (!tok.is_pop()) {
        sum -= std::log(predict(state, tok.nonterminal)[tok.production]);
        ++n;
      }
      state.update(tok);
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

long Sgwc::count(int nonterminal, const std::string& k, int production) const {
  auto cell = counts_.find({nonterminal, k});
  if (cell == counts_.end()) return 0;
  auto it = cell->second.find(production);
  return it == cell->second.end() ? 0 : it->second;
}

long Sgwc::total_count() const {
  long total = 0;
  for (const auto& [_, row] : counts_) {
    for (const auto& [__, c] : row) total += c;
  }
  return total;
}

std::string Sgwc::table() const {
  std::ostringstream out;
  for (const auto& [cell, row] : counts_) {
    for (const auto& [p, c] : row) {
      out << grammar_->nonterminals()[cell.first] << ' ' << (cell.second.empty() ? "-" : cell.second)
          << ' ' << grammar_->production(p).id << ' ' << c << '\n';
    }
  }
  return out.str();
}

void Sgwc::read_table(const std::string& text) {
  counts_.clear();
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string nt, bits, prod;
    long c = -1;
    if (!(fields >> nt >> bits >> prod >> c) || c < 0) {
      throw Error(ErrorCode::MalformedStream, "count table line " + std::to_string(number));
    }
    if (bits == "-") bits.clear();
    int n = grammar_->nonterminal_index(nt);
    int p = grammar_->production_index(prod);
    if (n < 0) throw Error(ErrorCode::UnknownNonterminal, nt);
    if (p < 0) throw Error(ErrorCode::UnknownProduction, prod);
    counts_[{n, bits}][p] = c;
  }
}

}  // namespace nam
