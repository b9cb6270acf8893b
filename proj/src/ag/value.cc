#include "nam/ag/value.h"

#include <array>

#include "nam/error.h"

namespace nam::ag {

namespace {

const std::array<FunctionSig, 10>& library() {
  using K = ValueKind;
  static const std::array<FunctionSig, 10> kLibrary = {{
      {"inc", {K::Integer}, K::Integer},
      {"eq", {K::Integer, K::Integer}, K::Boolean, true},
      {"not", {K::Boolean}, K::Boolean},
      {"and", {K::Boolean, K::Boolean}, K::Boolean},
      {"or", {K::Boolean, K::Boolean}, K::Boolean},
      {"union", {K::SymbolSet, K::SymbolSet}, K::SymbolSet},
      {"bind", {K::SymbolSet, K::TypeTag}, K::SymbolSet},
      {"declares", {K::SymbolSet, K::SymbolSet}, K::Boolean},
      {"has", {K::SymbolSet, K::SymbolSet}, K::Boolean},
      {"typeof", {K::SymbolSet, K::SymbolSet}, K::TypeTag},
  }};
  return kLibrary;
}

std::string binding_name(const std::string& symbol) {
  auto sep = symbol.find(kBindingSeparator);
  return sep == std::string::npos ? symbol : symbol.substr(0, sep);
}

std::string binding_type(const std::string& symbol) {
  auto sep = symbol.find(kBindingSeparator);
  return sep == std::string::npos ? std::string() : symbol.substr(sep + 1);
}

}  // namespace

const char* kind_name(ValueKind kind) {
  switch (kind) {
    case ValueKind::Integer: return "int";
    case ValueKind::Boolean: return "bool";
    case ValueKind::SymbolSet: return "set";
    case ValueKind::TypeTag: return "type";
  }
  return "?";
}

std::optional<ValueKind> parse_kind(const std::string& text) {
  if (text == "int" || text == "integer") return ValueKind::Integer;
  if (text == "bool" || text == "boolean") return ValueKind::Boolean;
  if (text == "set" || text == "symbol-set") return ValueKind::SymbolSet;
  if (text == "type" || text == "type-tag") return ValueKind::TypeTag;
  return std::nullopt;
}

ValueKind kind_of(const Value& value) {
  return static_cast<ValueKind>(value.index());
}

std::string to_string(const Value& value) {
  switch (kind_of(value)) {
    case ValueKind::Integer:
      return std::to_string(std::get<std::int64_t>(value));
    case ValueKind::Boolean:
      return std::get<bool>(value) ? "true" : "false";
    case ValueKind::SymbolSet: {
      std::string out = "{";
      bool first = true;
      for (const auto& s : std::get<SymbolSet>(value)) {
        if (!first) out += ",";
        out += s;
        first = false;
      }
      return out + "}";
    }
    case ValueKind::TypeTag: {
      const auto& tag = std::get<TypeTag>(value);
      return tag.is_none() ? "none" : tag.name;
    }
  }
  return "?";
}

const FunctionSig* find_function(const std::string& name) {
  for (const auto& sig : library()) {
    if (sig.name == name) return &sig;
  }
  return nullptr;
}

Value apply_function(const std::string& name, std::span<const Value> args) {
  auto set_arg = [&](std::size_t i) -> const SymbolSet& {
    return std::get<SymbolSet>(args[i]);
  };
  if (name == "inc") return std::get<std::int64_t>(args[0]) + 1;
  if (name == "eq") return args[0] == args[1];
  if (name == "not") return !std::get<bool>(args[0]);
  if (name == "and") return std::get<bool>(args[0]) && std::get<bool>(args[1]);
  if (name == "or") return std::get<bool>(args[0]) || std::get<bool>(args[1]);
  if (name == "union") {
    SymbolSet out = set_arg(0);
    out.insert(set_arg(1).begin(), set_arg(1).end());
    return out;
  }
  if (name == "bind") {
    const auto& tag = std::get<TypeTag>(args[1]);
    SymbolSet out;
    for (const auto& s : set_arg(0)) {
      out.insert(s + kBindingSeparator + (tag.is_none() ? "none" : tag.name));
    }
    return out;
  }
  if (name == "declares") {
    for (const auto& wanted : set_arg(1)) {
      bool found = false;
      for (const auto& bound : set_arg(0)) {
        if (binding_name(bound) == wanted) {
          found = true;
          break;
        }
      }
      if (!found) return false;
    }
    return true;
  }
  if (name == "has") {
    const auto& haystack = set_arg(0);
    for (const auto& s : set_arg(1)) {
      if (!haystack.contains(s)) return false;
    }
    return true;
  }
  if (name == "typeof") {
    // The unique type bound to the single named symbol, else none.
    const auto& names = set_arg(1);
    if (names.size() != 1) return TypeTag{};
    std::string found;
    for (const auto& bound : set_arg(0)) {
      if (binding_name(bound) != *names.begin()) continue;
      std::string type = binding_type(bound);
      if (!found.empty() && found != type) return TypeTag{};
      found = type;
    }
    if (found == "none") found.clear();
    return TypeTag{found};
  }
  throw Error(ErrorCode::EvaluationFailure, "unknown attribute function '" + name + "'");
}

}  // namespace nam::ag
