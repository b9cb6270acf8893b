#include "nam/error.h"

namespace nam {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::GrammarParse: return "GrammarParse";
    case ErrorCode::MalformedTree: return "MalformedTree";
    case ErrorCode::EvaluationFailure: return "EvaluationFailure";
    case ErrorCode::UnknownConstraint: return "UnknownConstraint";
    case ErrorCode::UnknownNonterminal: return "UnknownNonterminal";
    case ErrorCode::UnknownProduction: return "UnknownProduction";
    case ErrorCode::TooManyVariables: return "TooManyVariables";
    case ErrorCode::MalformedStream: return "MalformedStream";
    case ErrorCode::InconsistentStream: return "InconsistentStream";
    case ErrorCode::IllegalTruth: return "IllegalTruth";
    case ErrorCode::SpecInfeasible: return "SpecInfeasible";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::CorpusGrammarMismatch: return "CorpusGrammarMismatch";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::GrammarParse:
    case ErrorCode::BadConfig:
    case ErrorCode::SpecInfeasible:
      return 2;
    case ErrorCode::NonFiniteGradient:
      return 4;
    default:
      return 3;
  }
}

}  // namespace nam
