#pragma once

#include <optional>
#include <string>

namespace nam {

/// The two context-sensitive constraints shipped with the workbench.
enum class ConstraintId { DeclaredVariable, TypesafeVariable };

/// "declared_variable" / "typesafe_variable".
const char* constraint_name(ConstraintId id);

/// Short CLI form: "cd" / "ct".
const char* constraint_short_name(ConstraintId id);

/// Accepts the long names and the short forms "cd" / "ct".
std::optional<ConstraintId> parse_constraint(const std::string& text);

}  // namespace nam
