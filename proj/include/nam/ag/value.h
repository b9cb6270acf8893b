#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace nam::ag {

enum class ValueKind { Integer, Boolean, SymbolSet, TypeTag };

const char* kind_name(ValueKind kind);
std::optional<ValueKind> parse_kind(const std::string& text);

/// A type tag from the grammar's `types` list; the empty name is "none".
struct TypeTag {
  std::string name;

  bool is_none() const { return name.empty(); }
  friend bool operator==(const TypeTag&, const TypeTag&) = default;
};

using SymbolSet = std::set<std::string>;
using Value = std::variant<std::int64_t, bool, SymbolSet, TypeTag>;

ValueKind kind_of(const Value& value);
std::string to_string(const Value& value);

/// Separator between a variable name and its type inside a binding symbol.
inline constexpr char kBindingSeparator = ':';

/// Signature of one function in the attribute-equation library.
struct FunctionSig {
  std::string name;
  std::vector<ValueKind> params;  // empty + any_arity=false means nullary
  ValueKind result;
  bool same_kind_args = false;    // eq: both arguments share any kind
};

/// The fixed library available to attribute equations and constraints.
const FunctionSig* find_function(const std::string& name);

/// Applies a library function. Argument kinds must already be checked.
Value apply_function(const std::string& name, std::span<const Value> args);

}  // namespace nam::ag
