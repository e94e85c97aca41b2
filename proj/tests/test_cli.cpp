#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "memrec/cli.hpp"
#include "memrec/config.hpp"
#include "memrec/errors.hpp"
#include "test_util.hpp"

using namespace memrec;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "memrec");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliPipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = dir_.file("data.tsv");
    const auto r = run({"--seed", "7", "gen-data", "--rows", "10000", "--fields", "6", "--vocab", "2000", "--signal",
                        "2", "--out", data_});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  testutil::TempDir dir_;
  std::string data_;
};

}  // namespace

TEST(Cli, HelpExitsZero) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("Usage"), std::string::npos);
  for (const char* sub : {"gen-data", "train", "eval", "sweep", "collisions", "bench"}) {
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
    EXPECT_EQ(run({sub, "--help"}).code, kExitOk) << sub;
  }
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"bench", "--no-such-flag"}).code, kExitUsage);
  EXPECT_EQ(run({"bench", "--rows", "ten"}).code, kExitUsage);
  EXPECT_EQ(run({"bench", "--rows", "4", "--pooling", "8"}).code, kExitUsage);
  EXPECT_EQ(run({"collisions"}).code, kExitUsage);
}

TEST(Cli, MissingConfigNamesPath) {
  const auto r = run({"--config", "/definitely/missing.cfg", "train"});
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("/definitely/missing.cfg"), std::string::npos);
}

TEST(Cli, MissingDataFile) {
  const auto r = run({"train", "--data", "/no/data.tsv"});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("/no/data.tsv"), std::string::npos);
}

TEST(Cli, UnknownConfigKeyIsUsageError) {
  testutil::TempDir dir;
  const auto cfg = dir.file("bad.cfg");
  std::ofstream(cfg) << "learning_rate = 0.1\n";
  EXPECT_EQ(run({"--config", cfg, "train"}).code, kExitUsage);
}

TEST_F(CliPipeline, GenTrainEvalSmoke) {
  const auto ckpt = dir_.file("m.ckpt");
  const auto metrics = dir_.file("m.csv");
  const auto t = run({"--seed", "1", "train", "--data", data_, "--epochs", "1", "--checkpoint", ckpt, "--metrics",
                      metrics});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_EQ(t.out, slurp(metrics));
  EXPECT_EQ(std::count(t.out.begin(), t.out.end(), '\n'), 1);
  EXPECT_EQ(t.out.rfind("1,", 0), 0u);

  const auto e = run({"eval", "--checkpoint", ckpt, "--data", data_, "--split", "test"});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto j = nlohmann::json::parse(e.out);
  const double auc = j["auc"];
  EXPECT_GE(auc, 0.5);
  EXPECT_LE(auc, 1.0);
  EXPECT_GT(auc, 0.55);
  EXPECT_EQ(j["rows"], 1000);
  EXPECT_EQ(j["scheme"], "memrec");
}

TEST_F(CliPipeline, IdenticalInvocationsIdenticalOutputs) {
  std::vector<std::string> outs;
  for (int run_id = 0; run_id < 2; ++run_id) {
    const auto ckpt = dir_.file("d" + std::to_string(run_id) + ".ckpt");
    const auto metrics = dir_.file("d" + std::to_string(run_id) + ".csv");
    const auto t = run({"--seed", "3", "train", "--data", data_, "--epochs", "2", "--checkpoint", ckpt, "--metrics",
                        metrics});
    ASSERT_EQ(t.code, 0) << t.err;
    outs.push_back(slurp(ckpt) + slurp(metrics) + t.out);
  }
  EXPECT_EQ(outs[0], outs[1]);
  const auto again = dir_.file("again.tsv");
  ASSERT_EQ(run({"--seed", "7", "gen-data", "--rows", "10000", "--fields", "6", "--vocab", "2000", "--signal", "2",
                 "--out", again})
                .code,
            0);
  EXPECT_EQ(slurp(again), slurp(data_));
}

TEST_F(CliPipeline, ConfigFileWithOverrides) {
  const auto cfg = dir_.file("train.cfg");
  std::ofstream(cfg) << "# toy run\nembedding_scheme = hashtrick\nhashtrick_rows = 512\nepochs = 3\nl = 8\n"
                     << "data_path = " << data_ << "\ncheckpoint_path = " << dir_.file("c.ckpt")
                     << "\nmetrics_path = " << dir_.file("c.csv") << "\n";
  const auto r = run({"--config", cfg, "--json", "train", "--set", "epochs=1", "--set", "embedding_scheme=qr"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["scheme"], "qr");
  EXPECT_EQ(j["epochs"], 1);
  const auto e = run({"--json", "eval", "--checkpoint", dir_.file("c.ckpt"), "--data", data_});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(nlohmann::json::parse(e.out)["rows"], 10000);
}

TEST_F(CliPipeline, SweepEmitsOneRowPerConfig) {
  const auto r = run({"sweep", "--data", data_, "--epochs", "1", "--k", "1,2", "--d", "256,512", "--l", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "k,k_prime,d,d_prime,l,embedding_params,total_params,val_auc");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7);
  }
  EXPECT_EQ(rows, 4);
}

TEST_F(CliPipeline, DivergenceExitCode) {
  const auto r = run({"train", "--data", data_, "--lr", "1e30", "--epochs", "2", "--checkpoint",
                      dir_.file("x.ckpt"), "--metrics", dir_.file("x.csv")});
  EXPECT_EQ(r.code, kExitDivergence) << r.err;
}

TEST(Cli, EvalRejectsBadCheckpoint) {
  testutil::TempDir dir;
  const auto bad = dir.file("bad.ckpt");
  std::ofstream(bad) << "garbage";
  const auto data = dir.file("d.tsv");
  ASSERT_EQ(run({"gen-data", "--rows", "50", "--out", data}).code, 0);
  EXPECT_EQ(run({"eval", "--checkpoint", bad, "--data", data}).code, kExitData);
}

TEST(Cli, CollisionsJson) {
  const auto r = run({"collisions", "--k", "2", "--d", "64", "--k-prime", "2", "--d-prime", "64", "--vocab-size",
                      "500"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["num_tokens"], 500);
  EXPECT_LE(j["unresolved_pair_rate"].get<double>(), j["pair_full_collision_rate"].get<double>());

  testutil::TempDir dir;
  const auto vocab = dir.file("vocab.txt");
  std::ofstream(vocab) << "a\nb\nc\nb\n";
  const auto f = run({"collisions", "--vocab-file", vocab});
  ASSERT_EQ(f.code, 0) << f.err;
  EXPECT_EQ(nlohmann::json::parse(f.out)["num_tokens"], 3);
  EXPECT_EQ(run({"collisions", "--vocab-file", dir.file("nope.txt")}).code, kExitData);
}

TEST(Cli, BenchCsvAndJson) {
  const auto r = run({"--seed", "5", "bench", "--rows", "1024", "--row-len", "16", "--pooling", "8", "--queries",
                      "200", "--sizes", "256,1024"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 3);
  const auto j = run({"--seed", "5", "--json", "bench", "--rows", "1024", "--row-len", "16", "--pooling", "8",
                      "--queries", "200", "--dist", "zipf"});
  ASSERT_EQ(j.code, 0) << j.err;
  const auto parsed = nlohmann::json::parse(j.out);
  EXPECT_EQ(parsed["access"], "zipf");
  const auto j2 = run({"--seed", "5", "--json", "bench", "--rows", "1024", "--row-len", "16", "--pooling", "8",
                       "--queries", "200", "--dist", "zipf"});
  EXPECT_EQ(nlohmann::json::parse(j2.out)["checksum"], parsed["checksum"]);
}

TEST(Cli, RealBinaryExitCodes) {
  EXPECT_EQ(std::system(MEMREC_CLI_PATH " --help > /dev/null"), 0);
  const int code = std::system(MEMREC_CLI_PATH " --config /missing/file.cfg train > /dev/null 2>&1");
  EXPECT_TRUE(WIFEXITED(code));
  EXPECT_EQ(WEXITSTATUS(code), kExitData);
}

TEST(Config, KeyValueParsing) {
  const auto kv = KeyValueConfig::from_string("# c\n a = 1 \nb=x y\n\nlist = 13-64-16\nflag = true\n");
  EXPECT_EQ(kv.get_u64("a", 0), 1u);
  EXPECT_EQ(kv.get_string("b", ""), "x y");
  EXPECT_EQ(kv.get_sizes("list", {}), (std::vector<std::size_t>{13, 64, 16}));
  EXPECT_TRUE(kv.get_bool("flag", false));
  EXPECT_EQ(kv.get_double("missing", 2.5), 2.5);
  EXPECT_THROW(KeyValueConfig::from_string("no equals sign"), ConfigError);
  EXPECT_THROW((void)kv.get_u64("b", 0), ConfigError);
  EXPECT_EQ(parse_size_list("1,2,3"), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(format_size_list({13, 64}), "13-64");
}

TEST(Config, TrainingConfigDefaultsAndOverrides) {
  auto kv = KeyValueConfig::from_string("l = 8\nk = 3\nembedding_scheme = full\nlr = 0.05\n");
  const auto tc = training_config_from(kv);
  EXPECT_EQ(tc.model.embedding.encoder.l, 8u);
  EXPECT_EQ(tc.model.embedding.encoder.k, 3u);
  EXPECT_EQ(tc.model.embedding.scheme, EmbeddingScheme::full);
  EXPECT_EQ(tc.model.bottom, (std::vector<std::size_t>{13, 64, 32, 8}));
  EXPECT_DOUBLE_EQ(tc.options.lr, 0.05);
  kv.set_assignment("lr=0.2");
  EXPECT_DOUBLE_EQ(training_config_from(kv).options.lr, 0.2);
  kv.set_assignment("arch_mlp_bot=13-4-9");
  EXPECT_THROW((void)training_config_from(kv), ConfigError);
}
