// Acceptance gate: one PASS/FAIL line per criterion. `--only N` runs a single
// criterion; the process exits non-zero if any executed criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "memrec/baselines.hpp"
#include "memrec/bench.hpp"
#include "memrec/cli.hpp"
#include "memrec/data.hpp"
#include "memrec/embedding.hpp"
#include "memrec/metrics.hpp"
#include "memrec/model.hpp"
#include "memrec/tables.hpp"

using namespace memrec;

namespace {

enum class Verdict { pass, fail, warn };

struct Outcome {
  Verdict verdict = Verdict::fail;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("t" + std::to_string(rng()));
  return out;
}

double relative_error(double fd, double analytic) {
  return std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-7});
}

// ---------------------------------------------------------------------------
// 1. embed() against the dense formulation on 1,000 random small configs.
Outcome criterion_oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  std::normal_distribution<double> normal(0.0, 1.0);
  double max_err = 0.0;
  std::size_t embeddings = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    EncoderConfig cfg;
    cfg.d = 1 + rng() % 64;
    cfg.k = 1 + rng() % std::min<std::size_t>(8, cfg.d);
    cfg.d_prime = 1 + rng() % 64;
    cfg.k_prime = 1 + rng() % std::min<std::size_t>(8, cfg.d_prime);
    cfg.l = 1 + rng() % 16;
    cfg.hash_seed = rng();
    MemRecEmbedding<double> emb(cfg, rng());
    for (auto& w : emb.weight_table().data()) w = normal(rng);
    const auto& m = emb.token_table();
    const auto& w = emb.weight_table();
    for (int sample = 0; sample < 5; ++sample) {
      const auto field = static_cast<std::uint16_t>(rng() % 26);
      const auto tokens = random_tokens(rng, 1 + rng() % 4);
      std::vector<double> z(cfg.l);
      emb.embed(field, tokens, z);
      const auto phi = densify(emb.encoder().encode_feature(field, tokens), cfg.d);
      const auto phi_w = densify(emb.encoder().encode_feature_weight(field, tokens), cfg.d_prime);
      double a = 0.0;
      for (std::size_t i = 0; i < cfg.d_prime; ++i) a += phi_w[i] * w[i];
      for (std::size_t c = 0; c < cfg.l; ++c) {
        double s = 0.0;
        for (std::size_t j = 0; j < cfg.d; ++j) s += phi[j] * m.row(j)[c];
        max_err = std::max(max_err, std::abs(z[c] - a * s));
      }
      ++embeddings;
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = max_err <= 1e-12 && secs < 10.0;
  return {ok ? Verdict::pass : Verdict::fail,
          "1000 configs, " + std::to_string(embeddings) + " embeddings, max_abs_err=" + fmt(max_err) +
              " (tol 1e-12), " + fmt(secs, 3) + " s (limit 10 s)"};
}

// ---------------------------------------------------------------------------
// 2. Central finite differences for embed_backward and the full model.
Outcome criterion_gradients() {
  const auto t0 = Clock::now();
  constexpr double h = 1e-5;
  double worst_embed = 0.0;
  double worst_model = 0.0;
  std::size_t checked_embed = 0;
  std::size_t checked_model = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed * 7919);
    std::normal_distribution<double> normal(0.0, 1.0);

    // embed_backward on a pooled multi-token feature.
    EncoderConfig cfg;
    cfg.k = 4;
    cfg.k_prime = 3;
    cfg.d = 256;
    cfg.d_prime = 64;
    cfg.l = 16;
    cfg.hash_seed = rng();
    auto [m, w] = init_tables<double>(cfg, rng());
    for (auto& v : w.data()) v = normal(rng);
    const Encoder enc(cfg);
    const auto tokens = random_tokens(rng, 6);
    const auto ts = enc.encode_feature(0, tokens);
    const auto ws = enc.encode_feature_weight(0, tokens);
    std::vector<double> g(cfg.l);
    for (auto& v : g) v = normal(rng);
    const auto grad = embed_backward(m, w, ts, ws, g);
    const auto loss = [&] {
      const auto z = embed(m, w, ts, ws);
      return std::inner_product(z.begin(), z.end(), g.begin(), 0.0);
    };
    struct Coord {
      double* param;
      double analytic;
    };
    std::vector<Coord> coords;
    for (std::size_t n = 0; n < grad.token_index.size(); ++n) {
      for (std::size_t c = 0; c < cfg.l; ++c) coords.push_back({&m.row(grad.token_index[n])[c], grad.token_row(n)[c]});
    }
    for (std::size_t n = 0; n < grad.weight_index.size(); ++n) {
      coords.push_back({&w[grad.weight_index[n]], grad.weight_values[n]});
    }
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(std::min<std::size_t>(200, coords.size()));
    for (const auto& c : coords) {
      const double saved = *c.param;
      *c.param = saved + h;
      const double up = loss();
      *c.param = saved - h;
      const double down = loss();
      *c.param = saved;
      worst_embed = std::max(worst_embed, relative_error((up - down) / (2 * h), c.analytic));
      ++checked_embed;
    }

    // Whole model on one minibatch.
    SynthConfig sc;
    sc.seed = seed;
    sc.rows = 16;
    sc.fields = 4;
    sc.vocab_per_field = 40;
    const auto batch = synth_generate(sc).records;
    ModelConfig mc;
    mc.embedding.num_fields = 4;
    mc.embedding.encoder.d = 128;
    mc.embedding.encoder.d_prime = 64;
    mc.embedding.encoder.l = 8;
    mc.embedding.encoder.hash_seed = seed;
    mc.embedding.init_seed = seed + 1;
    mc.bottom = {kNumDense, 16, 8};
    mc.top = {16, 8, 1};
    Model<double> model(mc);
    // Move w off its uniform start so weight gradients differ between entries.
    for (auto& block : model.parameters()) {
      if (block.name == "memrec.weight_table") {
        for (auto& v : block.values) v = 0.5 + 0.25 * normal(rng);
      }
    }
    model.accumulate_gradients(batch);
    auto blocks = model.parameters();
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const bool table = blocks[b].name.rfind("memrec.", 0) == 0;
      for (std::size_t i = 0; i < blocks[b].values.size(); ++i) {
        if (!table || blocks[b].grads[i] != 0.0) candidates.emplace_back(b, i);
      }
    }
    std::shuffle(candidates.begin(), candidates.end(), rng);
    candidates.resize(std::min<std::size_t>(200, candidates.size()));
    for (const auto& [b, i] : candidates) {
      double& p = blocks[b].values[i];
      const double saved = p;
      p = saved + h;
      const double up = model.batch_loss(batch);
      p = saved - h;
      const double down = model.batch_loss(batch);
      p = saved;
      worst_model = std::max(worst_model, relative_error((up - down) / (2 * h), blocks[b].grads[i]));
      ++checked_model;
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = worst_embed < 1e-3 && worst_model < 1e-3 && secs < 60.0;
  return {ok ? Verdict::pass : Verdict::fail,
          "5 seeds; embed_backward " + std::to_string(checked_embed) + " params max_rel_err=" + fmt(worst_embed) +
              "; model " + std::to_string(checked_model) + " params max_rel_err=" + fmt(worst_model) +
              " (tol 1e-3), " + fmt(secs, 3) + " s (limit 60 s)"};
}

// ---------------------------------------------------------------------------
// 3. Mean popcount of single-token signatures against d(1 - (1 - 1/d)^k).
Outcome criterion_bloom_statistics() {
  bool ok = true;
  std::string detail;
  for (const auto [d, k] : {std::pair<std::size_t, std::size_t>{1024, 2}, {8192, 4}, {65536, 8}}) {
    EncoderConfig cfg;
    cfg.d = d;
    cfg.k = k;
    cfg.k_prime = 1;
    cfg.d_prime = 1;
    cfg.hash_seed = 3 * d + k;
    const Encoder enc(cfg);
    std::mt19937_64 rng(d * 31 + k);
    double sum = 0.0;
    double sq = 0.0;
    constexpr std::size_t n = 100000;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = static_cast<double>(enc.encode_token(0, "tok" + std::to_string(rng())).popcount());
      sum += p;
      sq += p * p;
    }
    const double mean = sum / n;
    const double se = std::sqrt(std::max(0.0, sq / n - mean * mean) / n);
    const double expected = static_cast<double>(d) * (1.0 - std::pow(1.0 - 1.0 / static_cast<double>(d), k));
    const double z = se > 0 ? std::abs(mean - expected) / se : (mean == expected ? 0.0 : INFINITY);
    ok = ok && z <= 3.0;
    detail += "(d=" + std::to_string(d) + ",k=" + std::to_string(k) + ") mean=" + fmt(mean, 7) +
              " expected=" + fmt(expected, 7) + " |z|=" + fmt(z, 3) + "; ";
  }
  return {ok ? Verdict::pass : Verdict::fail, detail + "tolerance 3 SE over 100000 tokens"};
}

// ---------------------------------------------------------------------------
// 4. The weight encoder resolves most token-signature collisions.
Outcome criterion_weight_mitigation() {
  EncoderConfig cfg;
  cfg.k = 2;
  cfg.d = 64;
  cfg.k_prime = 2;
  cfg.d_prime = 64;
  cfg.hash_seed = 44;
  std::vector<std::string> vocab;
  for (std::size_t i = 0; i < 2000; ++i) vocab.push_back("v" + std::to_string(i));
  const auto s = collision_stats(cfg, vocab);
  const bool enough = s.token_collision_pairs >= 100;
  const bool ok = enough && s.unresolved_pair_rate < s.pair_full_collision_rate;
  return {ok ? Verdict::pass : Verdict::fail,
          "vocab=2000 d=64 k=2: token-signature collisions=" + std::to_string(s.token_collision_pairs) +
              " (need >=100), token_only_rate=" + fmt(s.pair_full_collision_rate, 6) +
              "; with k'=2 d'=64 unresolved=" + std::to_string(s.unresolved_pairs) +
              " unresolved_rate=" + fmt(s.unresolved_pair_rate, 6)};
}

// ---------------------------------------------------------------------------
// 5. Size accounting against reference params/MB rows and the 2904x ratio.
struct SizeRow {
  const char* dataset;
  double params_m;
  double params_step_m;  // precision the table prints the parameter count with
  double megabytes;
};

SchemeConfig memrec_with_params(std::uint64_t params, std::size_t l) {
  SchemeConfig s;
  s.embedding.scheme = EmbeddingScheme::memrec;
  s.embedding.encoder.k = 1;
  s.embedding.encoder.k_prime = 1;
  s.embedding.encoder.l = l;
  s.embedding.encoder.d = params / (l + 1);
  s.embedding.encoder.d_prime = params - s.embedding.encoder.d * l;
  return s;
}

Outcome criterion_compression_accounting() {
  const SizeRow rows[] = {
      {"criteo-tb", 5, 1, 20},     {"criteo-tb", 8, 1, 33},     {"criteo-tb", 11, 1, 46},
      {"criteo-tb", 15, 1, 59},    {"criteo-tb", 21, 1, 84},    {"criteo-kaggle", 2, 1, 9},
      {"criteo-kaggle", 4, 1, 15}, {"criteo-kaggle", 5, 1, 21}, {"criteo-kaggle", 7, 1, 28},
      {"criteo-kaggle", 10, 1, 41}, {"avazu", 0.8, 0.1, 3},     {"avazu", 1.2, 0.1, 5},
      {"avazu", 1.6, 0.1, 6},      {"avazu", 2.0, 0.1, 8},      {"avazu", 2.4, 0.1, 10},
  };
  bool rows_ok = true;
  std::string detail;
  std::size_t point_ok = 0;
  for (const auto& r : rows) {
    const auto p = count_params(memrec_with_params(static_cast<std::uint64_t>(std::llround(r.params_m * 1e6)), 128));
    const double mb = static_cast<double>(p.bytes_at_f32) / 1e6;
    const double err = std::abs(mb - r.megabytes) / r.megabytes;
    bool ok = err <= 0.10;
    point_ok += ok;
    std::string how = "point";
    if (!ok) {
      // Both printed columns are rounded; accept when some parameter count
      // that rounds to the printed value lands within 10% of the printed size.
      const double lo = 4.0 * (r.params_m - r.params_step_m / 2);
      const double hi = 4.0 * (r.params_m + r.params_step_m / 2);
      ok = hi >= r.megabytes * 0.9 && lo <= r.megabytes * 1.1;
      how = "rounding-interval";
    }
    rows_ok = rows_ok && ok;
    if (!ok || how != "point") {
      detail += std::string(r.dataset) + " " + fmt(r.params_m) + "M->" + fmt(r.megabytes) + "MB: computed " +
                fmt(mb) + "MB (" + fmt(100 * err, 3) + "% off, " + how + (ok ? " ok" : " FAIL") + "); ";
    }
  }
  detail += std::to_string(point_ok) + "/15 rows within 10% at face value; ";

  // A concrete configuration of that size: the large table setting plus the
  // terabyte-scale MLPs.
  SchemeConfig tb = memrec_with_params(0, 128);
  tb.embedding.encoder.d = 75000;
  tb.embedding.encoder.d_prime = 75000;
  tb.embedding.encoder.k = 1;
  tb.embedding.encoder.k_prime = 4;
  tb.bottom = {13, 512, 256, 128};
  tb.top = {128 + 27 * 26 / 2, 1024, 1024, 512, 256, 1};
  const auto tbp = count_params(tb);
  const double tb_mb = static_cast<double>(tbp.bytes_at_f32) / 1e6;
  const bool tb_ok = std::abs(tb_mb - 46.0) / 46.0 <= 0.10;
  detail += "d=d'=75000,l=128 with MLPs: " + std::to_string(tbp.total) + " params = " + fmt(tb_mb) +
            " MB vs 46 MB (" + fmt(100 * std::abs(tb_mb - 46.0) / 46.0, 3) + "% off); ";

  SchemeConfig full;
  full.embedding.scheme = EmbeddingScheme::full;
  full.embedding.encoder.l = 128;
  full.cardinalities = {188000000};
  const auto compressed = memrec_with_params(11500000, 128);
  const double ratio = compression_ratio(full, compressed);
  const double ratio_err = std::abs(ratio - 2904.0) / 2904.0;
  const bool ratio_ok = ratio_err <= 0.15;
  detail += "ratio 188M x 128 x 4 B / " + fmt(static_cast<double>(count_params(compressed).bytes_at_f32) / 1e6) +
            " MB = " + fmt(ratio, 6) + "x vs 2904x (" + fmt(100 * ratio_err, 3) + "% off, tol 15%)";
  return {rows_ok && tb_ok && ratio_ok ? Verdict::pass : Verdict::fail, detail};
}

// ---------------------------------------------------------------------------
// 6. Desk-scale accuracy parity between MEM-REC and the full table.
double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

Outcome criterion_accuracy_parity() {
  const auto t0 = Clock::now();
  SynthConfig sc;
  sc.seed = 11;
  sc.rows = 100000;
  sc.fields = 8;
  sc.vocab_per_field = 50000;
  sc.signal_strength = 2.0;
  const auto ds = synth_generate(sc);
  const auto split = split_temporal(ds.records, 0.8, 0.1);
  const auto vocab = collect_vocab(split.train, sc.fields);

  std::vector<double> mem_auc, full_auc;
  std::size_t mem_params = 0, full_params = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    for (auto scheme : {EmbeddingScheme::memrec, EmbeddingScheme::full}) {
      ModelConfig mc;
      mc.embedding.scheme = scheme;
      mc.embedding.num_fields = sc.fields;
      mc.embedding.encoder.k = 2;
      mc.embedding.encoder.k_prime = 2;
      mc.embedding.encoder.d = 4096;
      mc.embedding.encoder.d_prime = 4096;
      mc.embedding.encoder.l = 16;
      mc.embedding.encoder.hash_seed = seed;
      mc.embedding.init_seed = seed + 1;
      TrainOptions opts;
      opts.epochs = 3;
      opts.shuffle_seed = seed + 2;
      Model<float> model(mc, &vocab);
      (void)train(model, split.train, split.val, opts);
      const double auc = evaluate_auc(model, split.test);
      (scheme == EmbeddingScheme::memrec ? mem_auc : full_auc).push_back(auc);
      (scheme == EmbeddingScheme::memrec ? mem_params : full_params) = model.embedding().param_count();
    }
  }
  const double mem = median3(mem_auc);
  const double full = median3(full_auc);
  const double frac = static_cast<double>(mem_params) / static_cast<double>(full_params);
  const double secs = seconds_since(t0);
  const bool ok = mem >= full - 0.01 && frac <= 0.05 && secs < 900.0;
  return {ok ? Verdict::pass : Verdict::fail,
          "median test AUC memrec=" + fmt(mem, 5) + " [" + fmt(mem_auc[0], 5) + "," + fmt(mem_auc[1], 5) + "," +
              fmt(mem_auc[2], 5) + "] full=" + fmt(full, 5) + " [" + fmt(full_auc[0], 5) + "," +
              fmt(full_auc[1], 5) + "," + fmt(full_auc[2], 5) + "] (need memrec >= full - 0.01); embedding params " +
              std::to_string(mem_params) + " vs " + std::to_string(full_params) + " = " + fmt(100 * frac, 3) +
              "% (limit 5%); " + fmt(secs, 3) + " s (limit 900 s)"};
}

// ---------------------------------------------------------------------------
// 7. k = 1 with a frozen unit weight is the hashing trick, bit for bit.
Outcome criterion_hashtrick_identity() {
  std::size_t compared = 0;
  std::size_t mismatches = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    EmbeddingConfig cfg;
    cfg.num_fields = 26;
    cfg.encoder.k = 1;
    cfg.encoder.k_prime = 1;
    cfg.encoder.d = 1000 * seed + 17;
    cfg.encoder.d_prime = 1;
    cfg.encoder.l = 16;
    cfg.encoder.hash_seed = seed * 101;
    cfg.hashtrick_rows = cfg.encoder.d;
    cfg.init_seed = seed * 7;
    cfg.train_weights = false;
    cfg.scheme = EmbeddingScheme::hashtrick;
    const auto ht = make_embedding<float>(cfg, nullptr);
    cfg.scheme = EmbeddingScheme::memrec;
    const auto mr = make_embedding<float>(cfg, nullptr);
    std::mt19937_64 rng(seed);
    std::vector<float> a(16), b(16);
    for (std::size_t i = 0; i < 20000; ++i) {
      const std::vector<std::string> tok = {"x" + std::to_string(rng())};
      const auto field = static_cast<std::uint16_t>(i % 26);
      ht->embed(field, tok, a);
      mr->embed(field, tok, b);
      mismatches += std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) != 0;
      ++compared;
    }
  }
  return {mismatches == 0 ? Verdict::pass : Verdict::fail,
          std::to_string(compared) + " single-token embeddings over 3 seeds, " + std::to_string(mismatches) +
              " byte mismatches"};
}

// ---------------------------------------------------------------------------
// 8. Pooled-lookup latency grows once the table leaves the cache hierarchy.
Outcome criterion_bench_trend() {
  const std::uint64_t llc = detect_llc_bytes();
  BenchSpec spec;
  spec.row_len = 128;
  spec.pooling_factor = 120;
  spec.num_threads = 1;
  spec.num_queries = 20000;
  spec.seed = 8;
  spec.access = AccessDistribution::uniform;
  const std::size_t row_bytes = spec.row_len * sizeof(float);
  const std::size_t small_rows = (1u << 20) / row_bytes;
  const std::size_t large_rows = static_cast<std::size_t>((8 * llc + row_bytes - 1) / row_bytes);
  const std::vector<std::size_t> sizes = {small_rows, 4 * small_rows, static_cast<std::size_t>(llc / row_bytes / 2),
                                          large_rows};
  std::vector<BenchReport> reports;
  try {
    reports = sweep_table_sizes(spec, sizes);
  } catch (const std::exception& e) {
    return {Verdict::warn, std::string("environment could not run the sweep: ") + e.what()};
  }
  std::cout << "  sweep CSV (llc=" << llc << " bytes):\n  " << bench_csv_header() << '\n';
  for (const auto& r : reports) std::cout << "  " << to_csv_row(r) << '\n';
  std::size_t monotone = 0;
  for (std::size_t i = 1; i < reports.size(); ++i) monotone += reports[i].throughput <= reports[i - 1].throughput;
  const double ratio = reports.back().mean_ns / reports.front().mean_ns;
  std::string detail = "mean latency " + fmt(reports.front().mean_ns, 6) + " ns at " +
                       std::to_string(reports.front().working_set_bytes) + " B vs " +
                       fmt(reports.back().mean_ns, 6) + " ns at " + std::to_string(reports.back().working_set_bytes) +
                       " B (>= 8x LLC): ratio " + fmt(ratio, 4) + " (need > 1.2); throughput non-increasing on " +
                       std::to_string(monotone) + "/3 steps";
  if (ratio > 1.2) return {Verdict::pass, detail};
  return {Verdict::warn, detail + "; environment-sensitive criterion, report attached above"};
}

// ---------------------------------------------------------------------------
// 9. Identical seeds give identical checkpoints, metric logs and checksums.
std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int cli(const std::vector<std::string>& args, std::ostream& out) {
  std::vector<const char*> argv = {"memrec"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

Outcome criterion_determinism() {
  const auto base = std::filesystem::temp_directory_path() / ("memrec_accept_" + std::to_string(::getpid()));
  std::vector<std::string> ckpts, logs, data, checksums;
  bool ran = true;
  for (int run_id = 0; run_id < 2; ++run_id) {
    const auto dir = base / std::to_string(run_id);
    std::filesystem::create_directories(dir);
    std::ostringstream sink;
    ran = ran && cli({"--seed", "9", "gen-data", "--rows", "20000", "--fields", "8", "--vocab", "5000", "--out",
                      (dir / "data.tsv").string()},
                     sink) == 0;
    for (const char* scheme : {"memrec", "full", "hashtrick", "qr"}) {
      ran = ran && cli({"--seed", "4", "train", "--data", (dir / "data.tsv").string(), "--epochs", "2", "--set",
                        std::string("embedding_scheme=") + scheme, "--checkpoint",
                        (dir / (std::string(scheme) + ".ckpt")).string(), "--metrics",
                        (dir / (std::string(scheme) + ".csv")).string()},
                       sink) == 0;
    }
    std::string ck, lg;
    for (const char* scheme : {"memrec", "full", "hashtrick", "qr"}) {
      ck += slurp(dir / (std::string(scheme) + ".ckpt"));
      lg += slurp(dir / (std::string(scheme) + ".csv"));
    }
    ckpts.push_back(ck);
    logs.push_back(lg);
    data.push_back(slurp(dir / "data.tsv"));
    std::string sums;
    for (auto dist : {AccessDistribution::uniform, AccessDistribution::zipf}) {
      for (bool hashing : {false, true}) {
        BenchSpec spec;
        spec.seed = 12;
        spec.table_rows = 100000;
        spec.num_queries = 3000;
        spec.access = dist;
        spec.include_hashing = hashing;
        std::ostringstream os;
        os.precision(17);
        os << run_bench(spec).checksum << ';';
        sums += os.str();
      }
    }
    checksums.push_back(sums);
  }
  std::error_code ec;
  std::filesystem::remove_all(base, ec);
  const bool ok = ran && !ckpts[0].empty() && !logs[0].empty() && ckpts[0] == ckpts[1] && logs[0] == logs[1] &&
                  data[0] == data[1] && checksums[0] == checksums[1];
  return {ok ? Verdict::pass : Verdict::fail,
          std::string("datasets ") + (data[0] == data[1] ? "identical" : "DIFFER") + " (" +
              std::to_string(data[0].size()) + " B); checkpoints of 4 schemes " +
              (ckpts[0] == ckpts[1] ? "identical" : "DIFFER") + " (" + std::to_string(ckpts[0].size()) +
              " B); metrics logs " + (logs[0] == logs[1] ? "identical" : "DIFFER") + "; bench checksums " +
              (checksums[0] == checksums[1] ? "identical" : "DIFFER") + " [" + checksums[0] + "]"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memrec acceptance gate"};
  std::vector<int> only;
  app.add_option("--only", only, "Run only these criteria (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "oracle equivalence", criterion_oracle_equivalence},
      {2, "gradient correctness", criterion_gradients},
      {3, "bloom statistics", criterion_bloom_statistics},
      {4, "weight-encoder mitigation", criterion_weight_mitigation},
      {5, "compression accounting", criterion_compression_accounting},
      {6, "desk-scale accuracy parity", criterion_accuracy_parity},
      {7, "hashing-trick reduction identity", criterion_hashtrick_identity},
      {8, "bench cache trend", criterion_bench_trend},
      {9, "determinism", criterion_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Verdict::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::pass ? "PASS" : (o.verdict == Verdict::warn ? "WARN" : "FAIL");
    std::cout << "[" << tag << "] criterion " << c.id << " (" << c.name << "): " << o.detail << std::endl;
    failures += o.verdict == Verdict::fail;
  }
  return failures == 0 ? 0 : 1;
}
