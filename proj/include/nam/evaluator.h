#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nam/ag/grammar.h"
#include "nam/ast.h"
#include "nam/constraint.h"
#include "nam/generate.h"

namespace nam {

/// Teacher-forced mean of -log p(true production) over the steps of
/// `trees` (pops excluded), natural log.
double avg_nll(Policy& policy, const ag::Grammar& grammar, ConstraintId constraint,
               const std::vector<AstTree>& trees);

struct TreeStats {
  double avg_vars = 0;
  double avg_procs = 0;
};

/// Means over complete trees. Throws Error(EmptyBatch) on no trees.
TreeStats tree_stats(const ag::Grammar& grammar, const std::vector<AstTree>& trees);
TreeStats tree_stats(const GenerationReport& report);

long count_violations(const GenerationReport& report);
int count_legal(const GenerationReport& report);

struct EvalRow {
  std::string model;  // table label, e.g. "NAM w/ both"
  double avg_vars = 0;
  double avg_procs = 0;
  long violations = 0;
  int legal = 0;
  double nll_train = 0;
  double nll_test = 0;
  // Machine-readable extras.
  int trees = 0;
  int incomplete = 0;
  std::uint64_t sample_seed = 0;

  friend bool operator==(const EvalRow&, const EvalRow&) = default;
};

struct EvalReport {
  std::string constraint;
  std::vector<EvalRow> rows;

  /// Rows in table order: Vanilla RNN, NAM w/ 3-level loss, NAM w/ context,
  /// NAM w/ both, SGWC, then anything else by name.
  void sort_rows();
  const EvalRow* find(const std::string& model) const;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Fixed-width text table.
std::string render_table(const EvalReport& report);
/// Comma-separated values with a fixed header; doubles in shortest
/// round-trip form.
std::string render_csv(const EvalReport& report);
/// Throws Error(MalformedStream).
EvalReport parse_csv(const std::string& text);

}  // namespace nam
