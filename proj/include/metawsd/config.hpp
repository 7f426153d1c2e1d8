#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "metawsd/episodes.hpp"
#include "metawsd/meta.hpp"
#include "metawsd/synthetic.hpp"

namespace metawsd {

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;  // empty: resolved from the method preset or unset
  std::string_view help;
};

/// Flat key/value run configuration. Unknown keys are rejected. Learning
/// rates, inner steps, batch size and create_graph default to the method's
/// preset when not given.
class RunConfig {
 public:
  static const std::vector<ConfigKey>& keys();
  static bool is_key(std::string_view name);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.contains(key); }
  std::string get(const std::string& key) const;

  /// Merge a flat JSON object (strings, numbers, booleans, arrays of numbers).
  void merge_json(const nlohmann::json& j);
  static RunConfig from_file(const std::filesystem::path& path);

  std::string get_string(const std::string& key) const { return get(key); }
  std::size_t get_size(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::uint64_t> get_u64_list(const std::string& key) const;
  std::optional<std::filesystem::path> get_path(const std::string& key) const;

  MetaConfig meta_config() const;
  BuildOptions build_options() const;
  SyntheticOptions synthetic_options() const;

  /// Every key with its effective value, presets applied.
  nlohmann::ordered_json resolved() const;
  void write_resolved(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> values_;
};

/// Parses "ef-<method>" or "<method>".
std::pair<Method, bool> parse_method_spec(std::string_view spec);

}  // namespace metawsd
