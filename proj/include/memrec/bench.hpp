#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace memrec {

enum class AccessDistribution { uniform, zipf };

[[nodiscard]] std::string_view to_string(AccessDistribution d) noexcept;
[[nodiscard]] AccessDistribution parse_distribution(std::string_view name);

/// One pooled-lookup microbenchmark configuration. A query gathers
/// `pooling_factor` rows of a table_rows x row_len float table and sums them.
struct BenchSpec {
  std::size_t table_rows = 1 << 16;
  std::size_t row_len = 128;
  std::size_t pooling_factor = 120;
  std::size_t num_queries = 20000;
  std::size_t num_threads = 1;
  std::uint64_t seed = 0;
  AccessDistribution access = AccessDistribution::uniform;
  // Hash each slot's token inside the timed loop instead of reading a
  // precomputed index.
  bool include_hashing = false;

  void validate() const;
  [[nodiscard]] std::uint64_t working_set_bytes() const noexcept {
    return static_cast<std::uint64_t>(table_rows) * row_len * sizeof(float);
  }
};

struct BenchReport {
  BenchSpec spec;
  double mean_ns = 0.0;
  double p50_ns = 0.0;
  double p95_ns = 0.0;
  double p99_ns = 0.0;
  double throughput = 0.0;  // pooled lookups per second
  std::uint64_t working_set_bytes = 0;
  double checksum = 0.0;  // sum of every pooled element over measured queries
};

[[nodiscard]] BenchReport run_bench(const BenchSpec& spec);

// One report per size; every size replays the same seeded random stream,
// reduced onto its own row range.
[[nodiscard]] std::vector<BenchReport> sweep_table_sizes(const BenchSpec& spec, std::span<const std::size_t> sizes);

[[nodiscard]] std::string bench_csv_header();
[[nodiscard]] std::string to_csv_row(const BenchReport& r);
[[nodiscard]] std::string to_json(const BenchReport& r);

// Size of the largest CPU cache reported by sysfs, or 32 MiB if unknown.
[[nodiscard]] std::uint64_t detect_llc_bytes();

}  // namespace memrec
