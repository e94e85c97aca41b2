#include "memrec/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "memrec/bench.hpp"
#include "memrec/config.hpp"
#include "memrec/data.hpp"
#include "memrec/errors.hpp"
#include "memrec/metrics.hpp"
#include "memrec/model.hpp"

namespace memrec {

namespace {

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  bool json = false;
};

struct TrainFlags {
  std::vector<std::string> overrides;
  std::string data, val, checkpoint, metrics;
  std::optional<std::size_t> epochs, batch_size;
  std::optional<double> lr;
};

KeyValueConfig load_kv(const GlobalFlags& g, const TrainFlags& t) {
  KeyValueConfig kv = g.config_path.empty() ? KeyValueConfig{} : KeyValueConfig::from_file(g.config_path);
  for (const auto& o : t.overrides) kv.set_assignment(o);
  if (g.seed) {
    kv.set("hash_seed", std::to_string(*g.seed));
    kv.set("init_seed", std::to_string(*g.seed + 1));
    kv.set("shuffle_seed", std::to_string(*g.seed + 2));
  }
  if (!t.data.empty()) kv.set("data_path", t.data);
  if (!t.val.empty()) kv.set("val_path", t.val);
  if (!t.checkpoint.empty()) kv.set("checkpoint_path", t.checkpoint);
  if (!t.metrics.empty()) kv.set("metrics_path", t.metrics);
  if (t.epochs) kv.set("epochs", std::to_string(*t.epochs));
  if (t.batch_size) kv.set("batch_size", std::to_string(*t.batch_size));
  if (t.lr) {
    std::ostringstream os;
    os.precision(17);
    os << *t.lr;
    kv.set("lr", os.str());
  }
  return kv;
}

struct LoadedData {
  std::vector<Record> records;
  std::vector<Record> val_records;
  SplitView splits;
};

LoadedData load_training_data(TrainingConfig& tc, std::ostream& err) {
  if (tc.data_path.empty()) throw ConfigError("no data_path given (config key data_path or --data)");
  LoadedData d;
  ParseOptions opts;
  opts.num_sparse = tc.num_sparse_fields;
  ParseReport rep;
  d.records = parse_criteo_tsv(tc.data_path, opts, &rep);
  if (rep.malformed) err << "skipped " << rep.malformed << " malformed lines in " << tc.data_path << '\n';
  tc.model.embedding.num_fields = rep.num_sparse;
  if (!tc.val_path.empty()) {
    opts.num_sparse = rep.num_sparse;
    d.val_records = parse_criteo_tsv(tc.val_path, opts);
    d.splits = {d.records, d.val_records, {}};
  } else {
    d.splits = split_temporal(d.records, tc.train_frac, tc.val_frac);
  }
  if (d.splits.train.empty()) throw DataError("training split is empty: " + tc.data_path);
  return d;
}

struct TrainOutcome {
  Model<float> model;
  std::vector<EpochLog> logs;
};

TrainOutcome fit(const TrainingConfig& tc, const SplitView& splits, const std::function<void(const EpochLog&)>& cb) {
  Vocab vocab;
  const Vocab* vp = nullptr;
  const auto scheme = tc.model.embedding.scheme;
  if (scheme == EmbeddingScheme::full || scheme == EmbeddingScheme::qr) {
    vocab = collect_vocab(splits.train, tc.model.embedding.num_fields);
    vp = &vocab;
  }
  Model<float> model(tc.model, vp);
  auto logs = train(model, splits.train, splits.val, tc.options, cb);
  return {std::move(model), std::move(logs)};
}

nlohmann::json nan_to_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

int cmd_train(const GlobalFlags& g, const TrainFlags& t, std::ostream& out, std::ostream& err) {
  auto tc = training_config_from(load_kv(g, t));
  const auto data = load_training_data(tc, err);
  std::ofstream metrics(tc.metrics_path);
  if (!metrics) throw DataError("cannot write metrics log: " + tc.metrics_path);
  auto outcome = fit(tc, data.splits, [&](const EpochLog& log) {
    metrics << format_epoch_log(log) << '\n';
    metrics.flush();
    if (!g.json) out << format_epoch_log(log) << '\n';
    err << "epoch " << log.epoch << " loss " << log.train_loss << " val_auc " << log.val_auc << '\n';
  });
  outcome.model.save_file(tc.checkpoint_path);
  if (g.json) {
    const auto& last = outcome.logs.back();
    nlohmann::json j = {{"scheme", std::string(to_string(tc.model.embedding.scheme))},
                        {"epochs", last.epoch},
                        {"train_loss", last.train_loss},
                        {"val_auc", nan_to_null(last.val_auc)},
                        {"params", outcome.model.param_count()},
                        {"embedding_params", outcome.model.embedding().param_count()},
                        {"checkpoint", tc.checkpoint_path}};
    out << j.dump() << '\n';
  }
  return kExitOk;
}

struct EvalFlags {
  std::string checkpoint;
  std::string data;
  std::string split = "all";
  double train_frac = 0.8;
  double val_frac = 0.1;
};

int cmd_eval(const EvalFlags& f, std::ostream& out) {
  const auto model = Model<float>::load_file(f.checkpoint);
  ParseOptions opts;
  opts.num_sparse = model.config().embedding.num_fields;
  const auto records = parse_criteo_tsv(f.data, opts);
  std::span<const Record> part = records;
  if (f.split != "all") {
    const auto s = split_temporal(records, f.train_frac, f.val_frac);
    if (f.split == "train") part = s.train;
    else if (f.split == "val") part = s.val;
    else if (f.split == "test") part = s.test;
    else throw ConfigError("--split must be all, train, val or test");
  }
  if (part.empty()) throw DataError("selected split is empty");
  const auto scores = predict(model, part);
  std::vector<int> labels;
  double logloss = 0.0;
  for (std::size_t i = 0; i < part.size(); ++i) {
    labels.push_back(part[i].label);
    logloss += bce_loss(scores[i], part[i].label);
  }
  nlohmann::json j = {{"auc", roc_auc(scores, labels)},
                      {"logloss", logloss / static_cast<double>(part.size())},
                      {"rows", part.size()},
                      {"scheme", std::string(to_string(model.config().embedding.scheme))}};
  out << j.dump() << '\n';
  return kExitOk;
}

struct SweepFlags {
  std::vector<std::size_t> k, k_prime, d, d_prime, l;
};

int cmd_sweep(const GlobalFlags& g, const TrainFlags& t, const SweepFlags& s, std::ostream& out,
              std::ostream& err) {
  const auto base = training_config_from(load_kv(g, t));
  auto tc0 = base;
  const auto data = load_training_data(tc0, err);
  const auto& enc = tc0.model.embedding.encoder;
  const auto or_default = [](const std::vector<std::size_t>& v, std::size_t dflt) {
    return v.empty() ? std::vector<std::size_t>{dflt} : v;
  };
  out << "k,k_prime,d,d_prime,l,embedding_params,total_params,val_auc\n";
  for (const auto k : or_default(s.k, enc.k)) {
    for (const auto kp : or_default(s.k_prime, enc.k_prime)) {
      for (const auto d : or_default(s.d, enc.d)) {
        for (const auto dp : or_default(s.d_prime, enc.d_prime)) {
          for (const auto l : or_default(s.l, enc.l)) {
            auto tc = tc0;
            auto& e = tc.model.embedding.encoder;
            e.k = k;
            e.k_prime = kp;
            e.d = d;
            e.d_prime = dp;
            e.l = l;
            tc.model.bottom.back() = l;
            auto outcome = fit(tc, data.splits, {});
            out << k << ',' << kp << ',' << d << ',' << dp << ',' << l << ','
                << outcome.model.embedding().param_count() << ',' << outcome.model.param_count() << ','
                << outcome.logs.back().val_auc << '\n';
            err << "sweep k=" << k << " k'=" << kp << " d=" << d << " d'=" << dp << " l=" << l << " done\n";
          }
        }
      }
    }
  }
  return kExitOk;
}

struct CollisionFlags {
  EncoderConfig cfg;
  std::string vocab_file;
  std::size_t vocab_size = 0;
  std::uint16_t field = 0;
};

int cmd_collisions(const GlobalFlags& g, CollisionFlags f, std::ostream& out) {
  if (g.seed) f.cfg.hash_seed = *g.seed;
  std::vector<std::string> tokens;
  if (!f.vocab_file.empty()) {
    std::ifstream in(f.vocab_file);
    if (!in) throw DataError("cannot read vocab file: " + f.vocab_file);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) tokens.push_back(line);
    }
  } else if (f.vocab_size > 0) {
    const std::uint64_t seed = g.seed.value_or(0);
    for (std::size_t i = 0; i < f.vocab_size; ++i) {
      std::ostringstream os;
      os << std::hex << derive_seed(seed ^ 0x766f636162ULL, i);
      tokens.push_back(os.str());
    }
  } else {
    throw ConfigError("collisions needs --vocab-file or --vocab-size");
  }
  out << to_json(collision_stats(f.cfg, tokens, f.field)) << '\n';
  return kExitOk;
}

struct BenchFlags {
  BenchSpec spec;
  std::string dist = "uniform";
  std::vector<std::size_t> sizes;
};

int cmd_bench(const GlobalFlags& g, BenchFlags f, std::ostream& out) {
  if (g.seed) f.spec.seed = *g.seed;
  f.spec.access = parse_distribution(f.dist);
  std::vector<BenchReport> reports;
  if (f.sizes.empty()) {
    reports.push_back(run_bench(f.spec));
  } else {
    reports = sweep_table_sizes(f.spec, f.sizes);
  }
  if (g.json) {
    for (const auto& r : reports) out << to_json(r) << '\n';
  } else {
    out << bench_csv_header() << '\n';
    for (const auto& r : reports) out << to_csv_row(r) << '\n';
  }
  return kExitOk;
}

struct GenFlags {
  SynthConfig cfg;
  std::string out_path;
};

int cmd_gen_data(const GlobalFlags& g, GenFlags f, std::ostream& out) {
  if (g.seed) f.cfg.seed = *g.seed;
  const auto ds = synth_generate(f.cfg);
  std::ofstream file(f.out_path);
  if (!file) throw DataError("cannot write dataset: " + f.out_path);
  write_criteo_tsv(file, ds.records);
  std::vector<int> labels;
  for (const auto& r : ds.records) labels.push_back(r.label);
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  nlohmann::json j = {{"path", f.out_path},
                      {"rows", ds.records.size()},
                      {"fields", f.cfg.fields},
                      {"label_rate", static_cast<double>(positives) / static_cast<double>(labels.size())}};
  if (positives > 0 && positives < static_cast<std::ptrdiff_t>(labels.size())) {
    j["oracle_auc"] = roc_auc(ds.oracle_logits, labels);
  }
  out << j.dump() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"memrec: dual Bloom-filter embeddings for CTR models"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--seed", g.seed, "Master seed for every random choice");
  app.add_option("--config", g.config_path, "key=value training config file");
  app.add_flag("--json", g.json, "Emit JSON instead of CSV/plain lines");

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic Criteo-format TSV dataset");
  gen_cmd->add_option("--rows", gen.cfg.rows)->capture_default_str();
  gen_cmd->add_option("--fields", gen.cfg.fields)->capture_default_str();
  gen_cmd->add_option("--vocab", gen.cfg.vocab_per_field, "Vocabulary size per field")->capture_default_str();
  gen_cmd->add_option("--signal", gen.cfg.signal_strength, "Weight of the sparse signal")->capture_default_str();
  gen_cmd->add_option("--out", gen.out_path, "Output TSV path")->required();

  TrainFlags tf;
  const auto add_train_flags = [&tf](CLI::App* cmd) {
    cmd->add_option("--set", tf.overrides, "Config override key=value (repeatable)");
    cmd->add_option("--data", tf.data, "Training TSV (config data_path)");
    cmd->add_option("--val", tf.val, "Validation TSV (config val_path)");
    cmd->add_option("--epochs", tf.epochs);
    cmd->add_option("--batch-size", tf.batch_size);
    cmd->add_option("--lr", tf.lr);
  };
  auto* train_cmd = app.add_subcommand("train", "Train a model; writes a checkpoint and per-epoch metrics log");
  add_train_flags(train_cmd);
  train_cmd->add_option("--checkpoint", tf.checkpoint, "Checkpoint output (config checkpoint_path)");
  train_cmd->add_option("--metrics", tf.metrics, "Metrics log output (config metrics_path)");

  EvalFlags ef;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint; prints AUC as JSON");
  eval_cmd->add_option("--checkpoint", ef.checkpoint)->required();
  eval_cmd->add_option("--data", ef.data)->required();
  eval_cmd->add_option("--split", ef.split, "all, train, val or test")->capture_default_str();
  eval_cmd->add_option("--train-frac", ef.train_frac)->capture_default_str();
  eval_cmd->add_option("--val-frac", ef.val_frac)->capture_default_str();

  SweepFlags sf;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train over a grid of k, k', d, d', l; prints CSV");
  add_train_flags(sweep_cmd);
  sweep_cmd->add_option("--k", sf.k)->delimiter(',');
  sweep_cmd->add_option("--k-prime", sf.k_prime)->delimiter(',');
  sweep_cmd->add_option("--d", sf.d)->delimiter(',');
  sweep_cmd->add_option("--d-prime", sf.d_prime)->delimiter(',');
  sweep_cmd->add_option("--l", sf.l)->delimiter(',');

  CollisionFlags cf;
  auto* coll_cmd = app.add_subcommand("collisions", "Signature collision statistics as JSON");
  coll_cmd->add_option("--k", cf.cfg.k)->capture_default_str();
  coll_cmd->add_option("--k-prime", cf.cfg.k_prime)->capture_default_str();
  coll_cmd->add_option("--d", cf.cfg.d)->capture_default_str();
  coll_cmd->add_option("--d-prime", cf.cfg.d_prime)->capture_default_str();
  coll_cmd->add_option("--field", cf.field)->capture_default_str();
  coll_cmd->add_option("--vocab-file", cf.vocab_file, "One token per line");
  coll_cmd->add_option("--vocab-size", cf.vocab_size, "Number of random tokens to draw");

  BenchFlags bf;
  auto* bench_cmd = app.add_subcommand("bench", "Pooled embedding-lookup microbenchmark");
  bench_cmd->add_option("--rows", bf.spec.table_rows)->capture_default_str();
  bench_cmd->add_option("--row-len", bf.spec.row_len)->capture_default_str();
  bench_cmd->add_option("--pooling", bf.spec.pooling_factor)->capture_default_str();
  bench_cmd->add_option("--queries", bf.spec.num_queries)->capture_default_str();
  bench_cmd->add_option("--threads", bf.spec.num_threads)->capture_default_str();
  bench_cmd->add_option("--dist", bf.dist, "uniform or zipf")->capture_default_str();
  bench_cmd->add_flag("--include-hashing", bf.spec.include_hashing, "Hash tokens inside the timed loop");
  bench_cmd->add_option("--sizes", bf.sizes, "Sweep these table_rows values")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(g, gen, out);
    if (*train_cmd) return cmd_train(g, tf, out, err);
    if (*eval_cmd) return cmd_eval(ef, out);
    if (*sweep_cmd) return cmd_sweep(g, tf, sf, out, err);
    if (*coll_cmd) return cmd_collisions(g, cf, out);
    if (*bench_cmd) return cmd_bench(g, bf, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace memrec
