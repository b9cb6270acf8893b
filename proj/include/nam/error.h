#pragma once

#include <stdexcept>
#include <string>

namespace nam {

enum class ErrorCode {
  GrammarParse,
  MalformedTree,
  EvaluationFailure,
  UnknownConstraint,
  UnknownNonterminal,
  UnknownProduction,
  TooManyVariables,
  MalformedStream,
  InconsistentStream,
  IllegalTruth,
  SpecInfeasible,
  ShapeMismatch,
  NonFiniteGradient,
  CorpusGrammarMismatch,
  EmptyBatch,
  BadConfig,
  Io,
};

/// Stable, machine-parseable name of an error code (e.g. "MalformedStream").
const char* error_code_name(ErrorCode code);

/// Process exit status used by the command-line tool for this code:
/// 2 validation failure, 3 data error, 4 numeric failure.
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nam
