#include "memrec/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <new>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "memrec/errors.hpp"
#include "memrec/hashing.hpp"
#include "memrec/tables.hpp"
#include "memrec/zipf.hpp"

namespace memrec {

std::string_view to_string(AccessDistribution d) noexcept {
  return d == AccessDistribution::uniform ? "uniform" : "zipf";
}

AccessDistribution parse_distribution(std::string_view name) {
  if (name == "uniform") return AccessDistribution::uniform;
  if (name == "zipf") return AccessDistribution::zipf;
  throw ConfigError("unknown access distribution '" + std::string(name) + "' (expected uniform or zipf)");
}

void BenchSpec::validate() const {
  if (table_rows == 0 || row_len == 0 || pooling_factor == 0 || num_queries == 0 || num_threads == 0) {
    throw ConfigError("bench spec fields must all be positive");
  }
  if (pooling_factor > table_rows) throw ConfigError("pooling_factor exceeds table_rows");
  if (table_rows > 0xffffffffULL) throw ConfigError("table_rows exceeds 32-bit row index space");
}

namespace {

constexpr double kZipfExponent = 1.05;
constexpr std::uint64_t kBenchHashTag = 0x62656e6368ULL;

double percentile(const std::vector<double>& sorted, double q) {
  const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size()))) - 1;
  return sorted[std::min(idx, sorted.size() - 1)];
}

std::vector<float> allocate_table(const BenchSpec& spec) {
  std::vector<float> table;
  try {
    table.resize(spec.table_rows * spec.row_len);
  } catch (const std::bad_alloc&) {
    throw Error("cannot allocate bench table of " + std::to_string(spec.working_set_bytes()) + " bytes (" +
                std::to_string(spec.table_rows) + " rows x " + std::to_string(spec.row_len) + ")");
  }
  std::mt19937_64 rng(derive_seed(spec.seed, 0x7461626c65ULL));
  fill_uniform(std::span<float>(table), 1.0, rng);
  return table;
}

// Raw 64-bit draws; each size reduces the same draws onto its own range.
std::vector<std::uint64_t> draw_stream(const BenchSpec& spec) {
  std::mt19937_64 rng(derive_seed(spec.seed, 0x73747265616dULL));
  std::vector<std::uint64_t> raw(spec.num_queries * spec.pooling_factor);
  for (auto& v : raw) v = rng();
  return raw;
}

std::vector<std::uint32_t> to_indices(const BenchSpec& spec, std::span<const std::uint64_t> raw) {
  std::vector<std::uint32_t> idx(raw.size());
  const auto rows = static_cast<std::uint32_t>(spec.table_rows);
  if (spec.access == AccessDistribution::uniform) {
    for (std::size_t i = 0; i < raw.size(); ++i) idx[i] = reduce_range(raw[i], rows);
    return idx;
  }
  // Zipf: treat each draw as a uniform variate and invert the CDF.
  const ZipfSampler zipf(spec.table_rows, kZipfExponent);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    idx[i] = static_cast<std::uint32_t>(zipf.rank_for(static_cast<double>(raw[i] >> 11) * 0x1.0p-53));
  }
  return idx;
}

struct Worker {
  const BenchSpec* spec;
  const float* table;
  const std::uint32_t* indices;        // precomputed mode
  const std::uint32_t* tokens;         // hashing mode: token ids to hash
  const HashFamily* family;
  std::vector<double>* latencies;      // indexed by query
  std::vector<double>* query_sums;
  std::size_t begin;
  std::size_t end;

  double run_query(std::size_t q, std::vector<float>& acc) const {
    std::fill(acc.begin(), acc.end(), 0.0f);
    const std::size_t len = spec->row_len;
    const std::size_t base = q * spec->pooling_factor;
    for (std::size_t s = 0; s < spec->pooling_factor; ++s) {
      std::uint32_t row;
      if (family) {
        const std::uint32_t tok = tokens[base + s];
        row = reduce_range(hash_bytes(std::string_view(reinterpret_cast<const char*>(&tok), sizeof(tok)),
                                      family->seeds()[0]),
                           family->range());
      } else {
        row = indices[base + s];
      }
      const float* r = table + static_cast<std::size_t>(row) * len;
      for (std::size_t c = 0; c < len; ++c) acc[c] += r[c];
    }
    double sum = 0.0;
    for (const float v : acc) sum += v;
    return sum;
  }

  void operator()() const {
    std::vector<float> acc(spec->row_len);
    const std::size_t n = end - begin;
    const std::size_t warmup = std::max<std::size_t>(1, n / 10);
    volatile double sink = 0.0;
    for (std::size_t w = 0; w < warmup && n > 0; ++w) sink = sink + run_query(begin + (w % n), acc);
    for (std::size_t q = begin; q < end; ++q) {
      const auto t0 = std::chrono::steady_clock::now();
      const double s = run_query(q, acc);
      const auto t1 = std::chrono::steady_clock::now();
      (*latencies)[q] = std::chrono::duration<double, std::nano>(t1 - t0).count();
      (*query_sums)[q] = s;
    }
  }
};

BenchReport run_with_stream(const BenchSpec& spec, std::span<const std::uint64_t> raw) {
  spec.validate();
  const auto table = allocate_table(spec);

  // In hashing mode the drawn ids are token ids that still go through the hash.
  const std::vector<std::uint32_t> indices = to_indices(spec, raw);
  std::optional<HashFamily> family;
  if (spec.include_hashing) family.emplace(1, spec.table_rows, derive_seed(spec.seed, kBenchHashTag));

  std::vector<double> latencies(spec.num_queries, 0.0);
  std::vector<double> sums(spec.num_queries, 0.0);
  const std::size_t threads = std::min(spec.num_threads, spec.num_queries);
  std::vector<Worker> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t b = spec.num_queries * t / threads;
    const std::size_t e = spec.num_queries * (t + 1) / threads;
    workers.push_back({&spec, table.data(), indices.data(), indices.data(), family ? &*family : nullptr, &latencies,
                       &sums, b, e});
  }

  if (threads == 1) {
    workers[0]();
  } else {
    std::vector<std::jthread> pool;
    for (const auto& w : workers) pool.emplace_back(w);
  }

  BenchReport rep;
  rep.spec = spec;
  rep.working_set_bytes = spec.working_set_bytes();
  for (const double s : sums) rep.checksum += s;
  double total = 0.0;
  for (const double l : latencies) total += l;
  rep.mean_ns = total / static_cast<double>(latencies.size());
  std::sort(latencies.begin(), latencies.end());
  rep.p50_ns = percentile(latencies, 0.50);
  rep.p95_ns = percentile(latencies, 0.95);
  rep.p99_ns = percentile(latencies, 0.99);
  // Workers run side by side, so wall time is the summed latency spread over them.
  const double seconds = total * 1e-9 / static_cast<double>(threads);
  rep.throughput = seconds > 0.0 ? static_cast<double>(spec.num_queries) / seconds : 0.0;
  return rep;
}

}  // namespace

BenchReport run_bench(const BenchSpec& spec) {
  spec.validate();
  const auto raw = draw_stream(spec);
  return run_with_stream(spec, raw);
}

std::vector<BenchReport> sweep_table_sizes(const BenchSpec& spec, std::span<const std::size_t> sizes) {
  const auto raw = draw_stream(spec);
  std::vector<BenchReport> out;
  for (const auto rows : sizes) {
    BenchSpec s = spec;
    s.table_rows = rows;
    out.push_back(run_with_stream(s, raw));
  }
  return out;
}

std::string bench_csv_header() {
  return "table_rows,row_len,pooling_factor,num_queries,num_threads,seed,access,include_hashing,"
         "working_set_bytes,mean_ns,p50_ns,p95_ns,p99_ns,throughput,checksum";
}

std::string to_csv_row(const BenchReport& r) {
  std::ostringstream os;
  os.precision(12);
  const auto& s = r.spec;
  os << s.table_rows << ',' << s.row_len << ',' << s.pooling_factor << ',' << s.num_queries << ',' << s.num_threads
     << ',' << s.seed << ',' << to_string(s.access) << ',' << (s.include_hashing ? 1 : 0) << ','
     << r.working_set_bytes << ',' << r.mean_ns << ',' << r.p50_ns << ',' << r.p95_ns << ',' << r.p99_ns << ','
     << r.throughput << ',' << r.checksum;
  return os.str();
}

std::string to_json(const BenchReport& r) {
  const auto& s = r.spec;
  nlohmann::json j = {{"table_rows", s.table_rows},
                      {"row_len", s.row_len},
                      {"pooling_factor", s.pooling_factor},
                      {"num_queries", s.num_queries},
                      {"num_threads", s.num_threads},
                      {"seed", s.seed},
                      {"access", std::string(to_string(s.access))},
                      {"include_hashing", s.include_hashing},
                      {"working_set_bytes", r.working_set_bytes},
                      {"mean_ns", r.mean_ns},
                      {"p50_ns", r.p50_ns},
                      {"p95_ns", r.p95_ns},
                      {"p99_ns", r.p99_ns},
                      {"throughput", r.throughput},
                      {"checksum", r.checksum}};
  return j.dump();
}

std::uint64_t detect_llc_bytes() {
  std::uint64_t best = 0;
  int best_level = -1;
  for (int i = 0; i < 8; ++i) {
    const std::string dir = "/sys/devices/system/cpu/cpu0/cache/index" + std::to_string(i) + "/";
    std::ifstream level_in(dir + "level"), size_in(dir + "size"), type_in(dir + "type");
    if (!level_in || !size_in) continue;
    int level = 0;
    std::string size, type;
    level_in >> level;
    size_in >> size;
    type_in >> type;
    if (type == "Instruction" || size.empty()) continue;
    std::uint64_t bytes = std::stoull(size);
    const char unit = size.back();
    if (unit == 'K') bytes <<= 10;
    if (unit == 'M') bytes <<= 20;
    if (unit == 'G') bytes <<= 30;
    if (level > best_level || (level == best_level && bytes > best)) {
      best_level = level;
      best = bytes;
    }
  }
  return best > 0 ? best : (32ULL << 20);
}

}  // namespace memrec
