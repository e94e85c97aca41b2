#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "memrec/model.hpp"

namespace memrec {

/// Plain-text `key = value` settings. Lines starting with '#' are comments.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  // Throws DataError naming the path if it cannot be read, ConfigError on a
  // line without '='.
  [[nodiscard]] static KeyValueConfig from_file(const std::string& path);
  [[nodiscard]] static KeyValueConfig from_string(std::string_view text, std::string_view origin = "<string>");

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  // Parses "key=value".
  void set_assignment(std::string_view assignment);
  [[nodiscard]] bool has(const std::string& key) const { return values_.contains(key); }
  [[nodiscard]] std::optional<std::string> get(const std::string& key) const;

  [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  [[nodiscard]] double get_double(const std::string& key, double fallback) const;
  [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
  [[nodiscard]] std::vector<std::size_t> get_sizes(const std::string& key, std::vector<std::size_t> fallback) const;

  // Throws ConfigError listing any key outside `known`.
  void require_known(const std::set<std::string>& known) const;

  [[nodiscard]] const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// "13-64-32-16" or "13,64,32,16".
[[nodiscard]] std::vector<std::size_t> parse_size_list(std::string_view text);
[[nodiscard]] std::string format_size_list(const std::vector<std::size_t>& sizes);

/// Everything the train command needs.
struct TrainingConfig {
  ModelConfig model;
  TrainOptions options;
  std::string data_path;
  std::string val_path;  // empty: carve validation out of data_path
  double train_frac = 0.8;
  double val_frac = 0.1;
  std::optional<std::size_t> num_sparse_fields;  // empty: infer from data
  std::string checkpoint_path = "model.ckpt";
  std::string metrics_path = "metrics.csv";
};

[[nodiscard]] const std::set<std::string>& training_config_keys();
[[nodiscard]] TrainingConfig training_config_from(const KeyValueConfig& kv);

}  // namespace memrec
