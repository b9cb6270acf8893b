#pragma once

#include <string>
#include <vector>

#include "nam/ag/grammar.h"

namespace nam::ag {

struct ValidationIssue {
  enum class Kind {
    Structural,
    UnknownReference,
    NotLAttributed,
    MissingEquation,
    DuplicateEquation,
    KindMismatch,
  };

  Kind kind;
  std::string production;  // empty for grammar-level issues
  int line = 0;
  std::string message;
};

const char* issue_kind_name(ValidationIssue::Kind kind);

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
  std::size_t count(ValidationIssue::Kind kind) const;
  /// One issue per line: `<line>: <kind>: [<production>: ]<message>`.
  std::string str() const;
};

/// Checks the structural rules of an attribute grammar, equation
/// completeness, value kinds, and L-attributedness of every equation.
/// Problems are reported, never thrown.
ValidationReport validate_grammar(const Grammar& grammar);

}  // namespace nam::ag
