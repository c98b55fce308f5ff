#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "survrnc/survrnc.hpp"

namespace fs = std::filesystem;
using namespace survrnc;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(SURVRNC_CLI) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("survrnc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenerateWritesDatasetAndTruth) {
  ASSERT_EQ(run("generate --n 50 --seed 3 --censoring 0.4 --out " + path("d.csv")), 0);
  const Dataset d = load_csv(path("d.csv"));
  EXPECT_EQ(d.size(), 50u);
  const Json truth = read_json_file(path("d.csv.truth.json"));
  EXPECT_EQ(truth["true_risk"].size(), 50u);
  EXPECT_EQ(truth["ids"][0], d.patients[0].id);
}

TEST_F(Cli, TrainRequiresSeed) {
  ASSERT_EQ(run("generate --n 40 --seed 1 --out " + path("d.csv")), 0);
  EXPECT_NE(run("train --data " + path("d.csv") + " --out-dir " + path("out")), 0);
}

TEST_F(Cli, TrainAppliesOverridesAndWritesOutputs) {
  ASSERT_EQ(run("generate --n 80 --seed 1 --out " + path("d.csv")), 0);
  {
    std::ofstream cfg(path("cfg.json"));
    cfg << R"({"epochs": 5, "num_bins": 6})";
  }
  ASSERT_EQ(run("train --data " + path("d.csv") + " --config " + path("cfg.json") + " --seed 2 --epochs 2 --lambda=0.7 " +
                "--head deephit --out-dir " + path("out")),
            0);
  const Json cfg = read_json_file(path("out/config.json"));
  EXPECT_EQ(cfg["epochs"], 2);
  EXPECT_EQ(cfg["num_bins"], 6);
  EXPECT_EQ(cfg["loss_cfg"]["lambda"], 0.7);
  EXPECT_EQ(cfg["head"], "deephit");
  EXPECT_EQ(cfg["seed"], 2);
  EXPECT_EQ(read_json_file(path("out/history.json"))["epochs"].size(), 2u);
  const Json ev = read_json_file(path("out/eval.json"));
  for (const char* k : {"ci", "auc_25", "auc_50", "auc_75", "ordinality"}) EXPECT_TRUE(ev.contains(k)) << k;

  ASSERT_EQ(run("evaluate --checkpoint " + path("out/checkpoint.json") + " --data " + path("d.csv") + " --out " +
                path("eval_all.json")),
            0);
  EXPECT_TRUE(read_json_file(path("eval_all.json"))["ci"].is_number());

  ASSERT_EQ(run("export-embeddings --checkpoint " + path("out/checkpoint.json") + " --data " + path("d.csv") +
                " --out " + path("emb.csv")),
            0);
  std::istringstream emb(slurp(path("emb.csv")));
  const Dataset e = parse_csv(emb);
  EXPECT_EQ(e.size(), 80u);
  EXPECT_EQ(e.num_features(), 32u);
}

TEST_F(Cli, RejectsUnknownOverrideAndBadData) {
  ASSERT_EQ(run("generate --n 40 --seed 1 --out " + path("d.csv")), 0);
  EXPECT_NE(run("train --data " + path("d.csv") + " --seed 1 --no-such-key 3 --out-dir " + path("o")), 0);
  {
    std::ofstream bad(path("bad.csv"));
    bad << "id,time,event,x1\na,1,2,0.5\n";
  }
  EXPECT_NE(run("train --data " + path("bad.csv") + " --seed 1 --out-dir " + path("o")), 0);
}

TEST_F(Cli, LambdaSweepTable) {
  ASSERT_EQ(run("generate --n 60 --seed 1 --out " + path("d.csv")), 0);
  ASSERT_EQ(run("lambda-sweep --data " + path("d.csv") + " --seed 1 --epochs 1 --lambdas 0.3,1.0 --out " +
                path("sweep.json")),
            0);
  const Json s = read_json_file(path("sweep.json"));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0]["lambda"], 0.3);
  EXPECT_EQ(s[1]["lambda"], 1.0);
}

TEST_F(Cli, PairsetsMatchesGoldenFile) {
  const fs::path data = fs::path(SURVRNC_TEST_DATA) / "nine_patients.csv";
  ASSERT_EQ(run("pairsets --data " + data.string() + " --out " + path("ps.csv")), 0);
  EXPECT_EQ(slurp(path("ps.csv")), slurp(fs::path(SURVRNC_TEST_DATA) / "nine_patients.pairsets.csv"));
}
