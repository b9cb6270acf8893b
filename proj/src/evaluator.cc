#include "nam/evaluator.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "nam/corpus.h"
#include "nam/error.h"
#include "nam/util/kv.h"

namespace nam {

double avg_nll(Policy& policy, const ag::Grammar& grammar, ConstraintId constraint,
               const std::vector<AstTree>& trees) {
  double sum = 0;
  long n = 0;
  std::vector<double> dist;
  for (const auto& tree : trees) {
    ContextState state = init_context(grammar, constraint);
    policy.reset();
    for (const Token& tok : linearize(grammar, tree)) {
      if (tok.is_pop()) {
        policy.pop(state);
      } else {
        policy.predict(state, tok.nonterminal, dist);
        sum -= std::log(dist[tok.production]);
        ++n;
      }
      state.update(tok);
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

TreeStats tree_stats(const ag::Grammar& grammar, const std::vector<AstTree>& trees) {
  if (trees.empty()) throw Error(ErrorCode::EmptyBatch, "no trees to measure");
  TreeStats s;
  for (const auto& t : trees) {
    TreeMeasures m = measure(grammar, t);
    s.avg_vars += m.vars;
    s.avg_procs += m.procs;
  }
  s.avg_vars /= static_cast<double>(trees.size());
  s.avg_procs /= static_cast<double>(trees.size());
  return s;
}

TreeStats tree_stats(const GenerationReport& report) {
  TreeStats s;
  int n = 0;
  for (const auto& t : report.trees) {
    if (!t.complete) continue;
    s.avg_vars += t.vars;
    s.avg_procs += t.procs;
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::EmptyBatch, "no complete trees in the report");
  s.avg_vars /= n;
  s.avg_procs /= n;
  return s;
}

long count_violations(const GenerationReport& report) { return report.violations(); }
int count_legal(const GenerationReport& report) { return report.legal(); }

namespace {

const std::vector<std::string> kOrder = {"Vanilla RNN", "NAM w/ 3-level loss", "NAM w/ context",
                                         "NAM w/ both", "SGWC"};

std::size_t rank(const std::string& model) {
  auto it = std::find(kOrder.begin(), kOrder.end(), model);
  return static_cast<std::size_t>(it - kOrder.begin());
}

const char* kCsvHeader =
    "constraint,model,avg_vars,avg_procs,violations,legal,nll_train,nll_test,trees,incomplete,"
    "sample_seed";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void EvalReport::sort_rows() {
  std::stable_sort(rows.begin(), rows.end(), [](const EvalRow& a, const EvalRow& b) {
    std::size_t ra = rank(a.model), rb = rank(b.model);
    if (ra != rb) return ra < rb;
    return ra == kOrder.size() && a.model < b.model;
  });
}

const EvalRow* EvalReport::find(const std::string& model) const {
  for (const auto& r : rows) {
    if (r.model == model) return &r;
  }
  return nullptr;
}

std::string render_table(const EvalReport& report) {
  const std::vector<std::string> header = {"Model",      "Avg. Vars.", "Avg. Procs.",
                                           "Constraint Violations", "Legal Trees",
                                           "NLL train",  "NLL test"};
  std::vector<std::vector<std::string>> cells = {header};
  for (const auto& r : report.rows) {
    auto fixed = [](double x, int digits) {
      std::ostringstream s;
      s << std::fixed << std::setprecision(digits) << x;
      return s.str();
    };
    cells.push_back({r.model, fixed(r.avg_vars, 2), fixed(r.avg_procs, 2),
                     std::to_string(r.violations), std::to_string(r.legal), fixed(r.nll_train, 3),
                     fixed(r.nll_test, 3)});
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << " | ";
      if (i == 0) out << std::left;
      else out << std::right;
      out << std::setw(static_cast<int>(width[i])) << row[i];
    }
    out << '\n';
  };
  line(cells[0]);
  for (std::size_t i = 0; i < width.size(); ++i) {
    if (i) out << "-+-";
    out << std::string(width[i], '-');
  }
  out << '\n';
  for (std::size_t r = 1; r < cells.size(); ++r) line(cells[r]);
  return out.str();
}

std::string render_csv(const EvalReport& report) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& r : report.rows) {
    out << report.constraint << ',' << r.model << ',' << format_double(r.avg_vars) << ','
        << format_double(r.avg_procs) << ',' << r.violations << ',' << r.legal << ','
        << format_double(r.nll_train) << ',' << format_double(r.nll_test) << ',' << r.trees << ','
        << r.incomplete << ',' << r.sample_seed << '\n';
  }
  return out.str();
}

EvalReport parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw Error(ErrorCode::MalformedStream, "report lacks the expected header");
  }
  EvalReport report;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv(line);
    if (f.size() != 11) throw Error(ErrorCode::MalformedStream, "report row: " + line);
    if (first) report.constraint = f[0];
    else if (f[0] != report.constraint) {
      throw Error(ErrorCode::MalformedStream, "report mixes constraints");
    }
    first = false;
    EvalRow r;
    try {
      r.model = f[1];
      r.avg_vars = std::stod(f[2]);
      r.avg_procs = std::stod(f[3]);
      r.violations = std::stol(f[4]);
      r.legal = std::stoi(f[5]);
      r.nll_train = std::stod(f[6]);
      r.nll_test = std::stod(f[7]);
      r.trees = std::stoi(f[8]);
      r.incomplete = std::stoi(f[9]);
      r.sample_seed = std::stoull(f[10]);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::MalformedStream, "report row: " + line);
    }
    report.rows.push_back(r);
  }
  return report;
}

}  // namespace nam
