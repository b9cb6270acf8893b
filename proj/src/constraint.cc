#include "nam/constraint.h"

namespace nam {

const char* constraint_name(ConstraintId id) {
  return id == ConstraintId::DeclaredVariable ? "declared_variable" : "typesafe_variable";
}

const char* constraint_short_name(ConstraintId id) {
  return id == ConstraintId::DeclaredVariable ? "cd" : "ct";
}

std::optional<ConstraintId> parse_constraint(const std::string& text) {
  if (text == "declared_variable" || text == "cd") return ConstraintId::DeclaredVariable;
  if (text == "typesafe_variable" || text == "ct") return ConstraintId::TypesafeVariable;
  return std::nullopt;
}

}  // namespace nam
