#pragma once

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace memrec {

inline constexpr std::size_t kNumDense = 13;
inline constexpr std::size_t kCriteoSparseFields = 26;

/// One CTR sample. `sparse[f]` lists the tokens of field f; an empty list is
/// a missing value.
struct Record {
  int label = 0;
  std::vector<double> dense;
  std::vector<std::vector<std::string>> sparse;

  bool operator==(const Record&) const = default;
};

struct DatasetMeta {
  std::size_t num_fields = 0;
  std::vector<std::size_t> cardinality;  // distinct non-missing tokens per field, at least 1
  std::size_t train_rows = 0;
  std::size_t val_rows = 0;
  std::size_t test_rows = 0;
};

// ln(1 + max(x, 0)).
[[nodiscard]] double transform_dense(long long raw) noexcept;

// Parses one line: label, 13 integer cells, `num_sparse` token cells.
// Returns nullopt for a malformed line.
[[nodiscard]] std::optional<Record> parse_criteo_line(std::string_view line, std::size_t num_sparse);

struct ParseOptions {
  // Number of categorical columns; inferred from the first line if unset.
  std::optional<std::size_t> num_sparse;
  double max_malformed_fraction = 0.01;
};

struct ParseReport {
  std::size_t lines = 0;
  std::size_t malformed = 0;
  std::size_t num_sparse = 0;
};

/// Streaming reader over a Criteo-format TSV file. Malformed lines are
/// skipped and counted; finish() raises DataError if too many were seen.
class CriteoTsvReader {
 public:
  explicit CriteoTsvReader(const std::string& path, ParseOptions opts = {});

  bool next(Record& out);
  const ParseReport& finish();
  [[nodiscard]] const ParseReport& report() const noexcept { return report_; }

 private:
  std::string path_;
  std::ifstream in_;
  ParseOptions opts_;
  ParseReport report_;
  std::string line_;
};

[[nodiscard]] std::vector<Record> parse_criteo_tsv(const std::string& path, ParseOptions opts = {},
                                                   ParseReport* report = nullptr);

// Writes records back in the same dialect; dense values are inverted to
// their integer counts.
void write_criteo_tsv(std::ostream& out, std::span<const Record> records);

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t rows = 10000;
  std::size_t fields = 8;
  std::size_t vocab_per_field = 1000;
  double signal_strength = 2.0;
  double zipf_exponent = 1.05;
};

struct SyntheticDataset {
  std::vector<Record> records;
  // Noise-free logit of each row; scoring by it gives the AUC ceiling.
  std::vector<double> oracle_logits;
};

// Tokens are Zipf-distributed per field. The label is drawn from
// sigmoid(signal * sum of hidden token scores + dense pair term + noise).
[[nodiscard]] SyntheticDataset synth_generate(const SynthConfig& cfg);

struct SplitView {
  std::span<const Record> train;
  std::span<const Record> val;
  std::span<const Record> test;
};

// Contiguous order-preserving split: floor(n*train_frac), floor(n*val_frac),
// and the remainder as test.
[[nodiscard]] SplitView split_temporal(std::span<const Record> records, double train_frac, double val_frac);

[[nodiscard]] DatasetMeta compute_meta(const SplitView& splits);

}  // namespace memrec
