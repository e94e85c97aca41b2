#include "memrec/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <unordered_set>

#include "memrec/errors.hpp"
#include "memrec/hashing.hpp"
#include "memrec/zipf.hpp"

namespace memrec {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

// murmur3 fmix32; bijective on 32-bit values.
std::uint32_t fmix32(std::uint32_t h) {
  h ^= h >> 16;
  h *= 0x85ebca6bU;
  h ^= h >> 13;
  h *= 0xc2b2ae35U;
  h ^= h >> 16;
  return h;
}

std::string hex8(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return std::string(buf, 8);
}

}  // namespace

double transform_dense(long long raw) noexcept {
  return std::log1p(static_cast<double>(std::max(raw, 0LL)));
}

std::optional<Record> parse_criteo_line(std::string_view line, std::size_t num_sparse) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto cells = split_tabs(line);
  if (cells.size() != 1 + kNumDense + num_sparse) return std::nullopt;

  Record rec;
  if (cells[0] == "0") {
    rec.label = 0;
  } else if (cells[0] == "1") {
    rec.label = 1;
  } else {
    return std::nullopt;
  }

  rec.dense.resize(kNumDense, 0.0);
  for (std::size_t j = 0; j < kNumDense; ++j) {
    const auto cell = cells[1 + j];
    if (cell.empty()) continue;
    long long raw = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), raw);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
    rec.dense[j] = transform_dense(raw);
  }

  rec.sparse.resize(num_sparse);
  for (std::size_t f = 0; f < num_sparse; ++f) {
    const auto cell = cells[1 + kNumDense + f];
    if (!cell.empty()) rec.sparse[f].emplace_back(cell);
  }
  return rec;
}

CriteoTsvReader::CriteoTsvReader(const std::string& path, ParseOptions opts)
    : path_(path), in_(path), opts_(opts) {
  if (!in_) throw DataError("cannot open dataset file: " + path);
  if (opts_.num_sparse) report_.num_sparse = *opts_.num_sparse;
}

bool CriteoTsvReader::next(Record& out) {
  while (std::getline(in_, line_)) {
    if (line_.empty() || line_ == "\r") continue;
    if (!opts_.num_sparse) {
      const auto cols = split_tabs(line_).size();
      if (cols <= 1 + kNumDense) throw DataError(path_ + ": first line has too few columns to infer the schema");
      opts_.num_sparse = cols - 1 - kNumDense;
      report_.num_sparse = *opts_.num_sparse;
    }
    ++report_.lines;
    auto rec = parse_criteo_line(line_, *opts_.num_sparse);
    if (!rec) {
      ++report_.malformed;
      continue;
    }
    out = std::move(*rec);
    return true;
  }
  return false;
}

const ParseReport& CriteoTsvReader::finish() {
  if (report_.lines > 0 &&
      static_cast<double>(report_.malformed) > opts_.max_malformed_fraction * static_cast<double>(report_.lines)) {
    throw DataError(path_ + ": " + std::to_string(report_.malformed) + " of " + std::to_string(report_.lines) +
                    " lines malformed");
  }
  return report_;
}

std::vector<Record> parse_criteo_tsv(const std::string& path, ParseOptions opts, ParseReport* report) {
  CriteoTsvReader reader(path, opts);
  std::vector<Record> records;
  Record rec;
  while (reader.next(rec)) records.push_back(std::move(rec));
  const auto& r = reader.finish();
  if (report) *report = r;
  return records;
}

void write_criteo_tsv(std::ostream& out, std::span<const Record> records) {
  std::string line;
  for (const auto& rec : records) {
    line.clear();
    line += rec.label ? '1' : '0';
    for (const double v : rec.dense) {
      line += '\t';
      line += std::to_string(std::llround(std::expm1(v)));
    }
    for (const auto& tokens : rec.sparse) {
      line += '\t';
      if (!tokens.empty()) line += tokens.front();
    }
    line += '\n';
    out << line;
  }
  if (!out) throw DataError("failed writing TSV output");
}

SyntheticDataset synth_generate(const SynthConfig& cfg) {
  if (cfg.rows == 0 || cfg.fields == 0 || cfg.vocab_per_field == 0) {
    throw ConfigError("synthetic dataset needs positive rows, fields and vocab");
  }
  constexpr double kTokenScoreMean = 0.25;
  constexpr double kNoiseStd = 0.5;
  constexpr double kDenseCoefStd = 0.5;
  constexpr double kGeometricP = 0.2;

  // Hidden parameters come from their own stream so the row stream is
  // independent of vocabulary size.
  std::mt19937_64 hidden(derive_seed(cfg.seed, 1));
  std::normal_distribution<double> unit(0.0, 1.0);
  const double field_scale = 1.0 / std::sqrt(static_cast<double>(cfg.fields));
  std::vector<std::vector<double>> scores(cfg.fields, std::vector<double>(cfg.vocab_per_field));
  for (auto& field : scores) {
    for (auto& s : field) s = (kTokenScoreMean + unit(hidden)) * field_scale;
  }
  std::vector<double> dense_coef(kNumDense / 2);
  for (auto& c : dense_coef) c = kDenseCoefStd * unit(hidden);
  std::vector<std::uint32_t> field_salt(cfg.fields);
  for (auto& s : field_salt) s = static_cast<std::uint32_t>(hidden());

  std::mt19937_64 rng(derive_seed(cfg.seed, 2));
  const ZipfSampler zipf(cfg.vocab_per_field, cfg.zipf_exponent);
  std::geometric_distribution<long long> counts(kGeometricP);

  SyntheticDataset out;
  out.records.reserve(cfg.rows);
  out.oracle_logits.reserve(cfg.rows);
  for (std::size_t i = 0; i < cfg.rows; ++i) {
    Record rec;
    rec.dense.resize(kNumDense);
    for (auto& v : rec.dense) v = transform_dense(counts(rng));
    rec.sparse.resize(cfg.fields);
    double sparse_term = 0.0;
    for (std::size_t f = 0; f < cfg.fields; ++f) {
      const auto rank = zipf(rng);
      sparse_term += scores[f][rank];
      rec.sparse[f].push_back(hex8(fmix32(static_cast<std::uint32_t>(rank) + field_salt[f])));
    }
    // Differences of i.i.d. pairs keep the dense term symmetric about 0.
    double dense_term = 0.0;
    for (std::size_t j = 0; j < dense_coef.size(); ++j) {
      dense_term += dense_coef[j] * (rec.dense[2 * j] - rec.dense[2 * j + 1]);
    }
    const double logit = cfg.signal_strength * sparse_term + dense_term;
    const double noisy = logit + kNoiseStd * unit(rng);
    const double p = 1.0 / (1.0 + std::exp(-noisy));
    rec.label = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p ? 1 : 0;
    out.records.push_back(std::move(rec));
    out.oracle_logits.push_back(logit);
  }
  return out;
}

SplitView split_temporal(std::span<const Record> records, double train_frac, double val_frac) {
  if (train_frac < 0.0 || val_frac < 0.0 || train_frac + val_frac > 1.0 + 1e-12) {
    throw ConfigError("split fractions must be nonnegative and sum to at most 1");
  }
  const std::size_t n = records.size();
  const auto n_train = std::min(n, static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_frac)));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::floor(static_cast<double>(n) * val_frac)));
  return {records.subspan(0, n_train), records.subspan(n_train, n_val), records.subspan(n_train + n_val)};
}

DatasetMeta compute_meta(const SplitView& splits) {
  DatasetMeta meta;
  meta.train_rows = splits.train.size();
  meta.val_rows = splits.val.size();
  meta.test_rows = splits.test.size();
  std::vector<std::unordered_set<std::string>> seen;
  for (const auto part : {splits.train, splits.val, splits.test}) {
    for (const auto& rec : part) {
      if (seen.size() < rec.sparse.size()) seen.resize(rec.sparse.size());
      for (std::size_t f = 0; f < rec.sparse.size(); ++f) {
        for (const auto& t : rec.sparse[f]) seen[f].insert(t);
      }
    }
  }
  meta.num_fields = seen.size();
  for (const auto& s : seen) meta.cardinality.push_back(std::max<std::size_t>(1, s.size()));
  return meta;
}

}  // namespace memrec
