#include "nitrom/io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nitrom_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string &name) const { return (dir_ / name).string(); }

  int run(const std::string &args) const {
    const std::string cmd = std::string(NITROM_CLI_PATH) + " " + args + " 2>" + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  void write(const std::string &name, const std::string &text) const {
    nitrom::write_text(path(name), text);
  }

  fs::path dir_;
};

} // namespace

TEST_F(Cli, GenerateDataIsDeterministic) {
  ASSERT_EQ(run("generate-data --benchmark toy --protocol test --seed 4 --count 3 --out " + path("a.json")), 0);
  ASSERT_EQ(run("generate-data --benchmark toy --protocol toy-test --seed 4 --count 3 --out " + path("b.json")), 0);
  EXPECT_EQ(nitrom::read_text(path("a.json")), nitrom::read_text(path("b.json")));
  const nitrom::Dataset ds = nitrom::load_dataset(path("a.json"));
  EXPECT_EQ(ds.trajectories.size(), 3u);
  EXPECT_EQ(ds.protocol, "test");
  ASSERT_EQ(run("generate-data --benchmark toy --protocol test --seed 5 --count 3 --no-states --out " + path("c.json")), 0);
  EXPECT_FALSE(nitrom::load_dataset(path("c.json")).trajectories[0].has_states());
}

TEST_F(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("generate-data --benchmark toy --seed 1 --out " + path("x.json")), 2);
  EXPECT_EQ(run("generate-data --benchmark toy --protocol chirp --seed 1 --out " + path("x.json")), 2);
  EXPECT_EQ(run("generate-data --benchmark heat --protocol train --seed 1 --out " + path("x.json")), 2);
  EXPECT_EQ(run("evaluate --model " + path("missing.json") + " --data " + path("missing.json") +
                " --out " + path("e.csv")),
            2);
  EXPECT_FALSE(fs::exists(path("x.json")));
}

TEST_F(Cli, TrainBaselineEvaluatePipeline) {
  ASSERT_EQ(run("generate-data --benchmark toy --protocol train --seed 0 --out " + path("train.json")), 0);
  ASSERT_EQ(run("generate-data --benchmark toy --protocol test --seed 1 --count 5 --out " + path("test.json")), 0);
  write("cfg.json", R"({"benchmark":"toy","optimizer":{"max_iterations":5}})");
  const std::string train = "train --config " + path("cfg.json") + " --data " + path("train.json");
  ASSERT_EQ(run(train + " --out " + path("nitrom.json") + " --log " + path("log.csv")), 0);
  ASSERT_EQ(run(train + " --out " + path("again.json") + " --log " + path("log2.csv")), 0);
  EXPECT_EQ(nitrom::read_text(path("nitrom.json")), nitrom::read_text(path("again.json")));
  EXPECT_EQ(nitrom::read_text(path("log.csv")), nitrom::read_text(path("log2.csv")));
  const std::string log = nitrom::read_text(path("log.csv"));
  EXPECT_EQ(log.substr(0, log.find('\n')), "iteration,cost,grad_norm,step_size,phase");

  const nitrom::ModelFile mf = nitrom::load_model(path("nitrom.json"));
  EXPECT_EQ(mf.kind, "nitrom");
  EXPECT_EQ(mf.benchmark, "toy");
  EXPECT_EQ(mf.data_hash, nitrom::hex64(nitrom::fnv1a64(nitrom::read_text(path("train.json")))));
  EXPECT_EQ(mf.config_hash, nitrom::config_hash(nitrom::load_config(path("cfg.json"))));

  ASSERT_EQ(run("baseline --method opinf --r 2 --data " + path("train.json") + " --out " + path("opinf.json")), 0);
  ASSERT_EQ(run("baseline --method pod-galerkin --r 2 --benchmark toy --data " + path("train.json") +
                " --out " + path("galerkin.json")),
            0);
  EXPECT_EQ(run("baseline --method pod-galerkin --r 2 --data " + path("train.json") + " --out " +
                path("g2.json")),
            2);
  EXPECT_EQ(run("baseline --method opinf --r 9 --data " + path("train.json") + " --out " + path("o9.json")), 2);

  ASSERT_EQ(run("evaluate --model " + path("nitrom.json") + " " + path("opinf.json") + " " +
                path("galerkin.json") + " --data " + path("test.json") + " --out " + path("e.csv") +
                " --traces " + path("traces.csv")),
            0);
  std::istringstream csv(nitrom::read_text(path("e.csv")));
  std::string line, last;
  std::getline(csv, line);
  EXPECT_EQ(line, "t,e_nitrom,e_opinf,e_galerkin");
  int rows = 0;
  while (std::getline(csv, line)) {
    last = line;
    ++rows;
  }
  EXPECT_EQ(rows, 21); // 20 samples + mean
  EXPECT_EQ(last.rfind("mean,", 0), 0u);
  const std::string traces = nitrom::read_text(path("traces.csv"));
  EXPECT_EQ(traces.substr(0, traces.find('\n')),
            "trajectory,t,y0_truth,y0_nitrom,y0_opinf,y0_galerkin");
}

TEST_F(Cli, TrainRejectsMismatchedOrUnknownConfig) {
  ASSERT_EQ(run("generate-data --benchmark toy --protocol train --seed 0 --out " + path("train.json")), 0);
  write("cgl.json", R"({"benchmark":"cgl"})");
  write("typo.json", R"({"benchmark":"toy","max_iter":3})");
  write("broken.json", R"({"benchmark":)");
  for (const char *cfg : {"cgl.json", "typo.json", "broken.json"})
    EXPECT_EQ(run("train --config " + path(cfg) + " --data " + path("train.json") + " --out " +
                  path("m.json") + " --log " + path("l.csv")),
              2)
        << cfg;
  EXPECT_FALSE(fs::exists(path("m.json")));
}
