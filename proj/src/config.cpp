#include "memrec/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "memrec/errors.hpp"

namespace memrec {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str(), path);
}

KeyValueConfig KeyValueConfig::from_string(std::string_view text, std::string_view origin) {
  KeyValueConfig kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": expected key=value");
    }
    kv.set(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  return kv;
}

void KeyValueConfig::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))));
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto v = get(key);
  return v ? parse_number<std::uint64_t>(key, *v) : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  return v ? parse_number<double>(key, *v) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "1" || *v == "true" || *v == "yes") return true;
  if (*v == "0" || *v == "false" || *v == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + *v + "'");
}

std::vector<std::size_t> KeyValueConfig::get_sizes(const std::string& key, std::vector<std::size_t> fallback) const {
  const auto v = get(key);
  return v ? parse_size_list(*v) : fallback;
}

void KeyValueConfig::require_known(const std::set<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
}

std::vector<std::size_t> parse_size_list(std::string_view text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find_first_of("-,", start);
    if (end == std::string_view::npos) end = text.size();
    const auto item = std::string(trim(text.substr(start, end - start)));
    out.push_back(parse_number<std::size_t>("size list", item));
    start = end + 1;
  }
  return out;
}

std::string format_size_list(const std::vector<std::size_t>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(sizes[i]);
  }
  return out;
}

const std::set<std::string>& training_config_keys() {
  static const std::set<std::string> keys = {
      "embedding_scheme", "k",          "k_prime",       "d",           "d_prime",        "l",
      "hash_seed",        "init_seed",  "shuffle_seed",  "arch_mlp_bot", "arch_mlp_top",  "lr",
      "batch_size",       "epochs",     "data_path",     "val_path",    "train_frac",     "val_frac",
      "num_sparse_fields", "hashtrick_rows", "qr_buckets", "train_weights", "checkpoint_path", "metrics_path"};
  return keys;
}

TrainingConfig training_config_from(const KeyValueConfig& kv) {
  kv.require_known(training_config_keys());
  TrainingConfig tc;
  auto& e = tc.model.embedding;
  e.scheme = parse_scheme(kv.get_string("embedding_scheme", "memrec"));
  e.encoder.k = kv.get_u64("k", e.encoder.k);
  e.encoder.k_prime = kv.get_u64("k_prime", e.encoder.k_prime);
  e.encoder.d = kv.get_u64("d", e.encoder.d);
  e.encoder.d_prime = kv.get_u64("d_prime", e.encoder.d_prime);
  e.encoder.l = kv.get_u64("l", e.encoder.l);
  e.encoder.hash_seed = kv.get_u64("hash_seed", e.encoder.hash_seed);
  e.init_seed = kv.get_u64("init_seed", e.init_seed);
  e.hashtrick_rows = kv.get_u64("hashtrick_rows", e.hashtrick_rows);
  e.qr_buckets = kv.get_u64("qr_buckets", e.qr_buckets);
  e.train_weights = kv.get_bool("train_weights", e.train_weights);
  if (const auto f = kv.get("num_sparse_fields")) {
    tc.num_sparse_fields = kv.get_u64("num_sparse_fields", 0);
    e.num_fields = *tc.num_sparse_fields;
  }

  tc.model.bottom = kv.get_sizes("arch_mlp_bot", {kNumDense, 64, 32, e.encoder.l});
  tc.model.top = kv.get_sizes("arch_mlp_top", tc.model.top);

  tc.options.lr = kv.get_double("lr", tc.options.lr);
  tc.options.batch_size = kv.get_u64("batch_size", tc.options.batch_size);
  tc.options.epochs = kv.get_u64("epochs", tc.options.epochs);
  tc.options.shuffle_seed = kv.get_u64("shuffle_seed", tc.options.shuffle_seed);

  tc.data_path = kv.get_string("data_path", "");
  tc.val_path = kv.get_string("val_path", "");
  tc.train_frac = kv.get_double("train_frac", tc.train_frac);
  tc.val_frac = kv.get_double("val_frac", tc.val_frac);
  tc.checkpoint_path = kv.get_string("checkpoint_path", tc.checkpoint_path);
  tc.metrics_path = kv.get_string("metrics_path", tc.metrics_path);

  tc.model.validate();
  if (tc.options.epochs == 0) throw ConfigError("epochs must be positive");
  if (tc.options.batch_size == 0) throw ConfigError("batch_size must be positive");
  return tc;
}

}  // namespace memrec
