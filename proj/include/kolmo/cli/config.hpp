#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kolmo::cli {

enum class ValueType { kInt, kDouble, kBool, kString, kIntList, kDoubleList };

std::string type_name(ValueType type);

struct KeySpec {
  std::string key;
  std::string section;
  ValueType type;
  std::string default_value;  // empty means "problem default" where that applies
  std::string help;
};

/// Every recognised key. Problem parameters live in [problem] and are checked
/// against the registry instead.
const std::vector<KeySpec>& config_schema();
const KeySpec* find_key(const std::string& key);

/// Closest schema key within edit distance 2, if any.
std::optional<std::string> suggest_key(const std::string& key);

/// Merged configuration: schema values plus problem overrides, stored as text
/// and validated against their declared types on insertion.
class RunConfig {
 public:
  RunConfig();

  /// Throws ConfigError for unknown keys (with a suggestion) or type mismatches.
  void set(const std::string& key, const std::string& value);
  void set_problem_param(const std::string& key, const std::string& value);

  const std::string& raw(const std::string& key) const;
  bool is_default(const std::string& key) const;
  bool has_value(const std::string& key) const { return !raw(key).empty(); }

  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  const std::string& get_string(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;

  const std::map<std::string, double>& problem_params() const { return problem_params_; }

  /// Canonical text: every section in schema order, keys in schema order,
  /// then [problem] overrides sorted by key. Parsing it yields an equal config.
  std::string echo() const;

  bool operator==(const RunConfig& other) const = default;

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, double> problem_params_;
};

/// Parses `key = value` lines with optional `[section]` headers and `#`
/// comments into `config`. Throws ConfigError naming the line on a duplicate
/// key, an unknown section, a key outside its section, or a bad value.
void parse_config_text(const std::string& text, RunConfig& config, const std::string& origin = "config");

void load_config(const std::string& path, RunConfig& config);

/// Applies PREFIX<KEY> environment variables (key upper-cased) for schema keys.
void apply_environment(RunConfig& config, const std::string& prefix = "KOLMO_");

}  // namespace kolmo::cli
