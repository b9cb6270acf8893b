#pragma once

#include <map>
#include <string>

namespace nam {

/// Line-oriented `key = value` text with `#` comments. Keys are kept sorted
/// so that writing a map is deterministic.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& origin = "<text>");
  static KeyValues load(const std::string& path);

  /// Parses `key=value`; throws Error(BadConfig) without an `=`.
  void set_assignment(const std::string& assignment);
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  /// Typed lookups fall back to `fallback` when the key is absent and throw
  /// Error(BadConfig) when the value does not parse.
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Keys not in `known`, comma separated; empty when all are known.
  std::string unknown_keys(const std::initializer_list<const char*>& known) const;

  std::string str() const;
  void save(const std::string& path) const;

 private:
  std::map<std::string, std::string> values_;
};

/// Shortest text that parses back to exactly `x`.
std::string format_double(double x);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace nam
