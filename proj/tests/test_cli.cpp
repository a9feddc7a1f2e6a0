#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "gibconf/io.hpp"

#ifndef GIBCONF_CLI
#error "GIBCONF_CLI must name the command-line binary"
#endif

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(GIBCONF_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("gibconf_cli_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    gibconf::write_file_atomic(root_ / "cfg.txt", "epochs=2\nlambda=100\n");
  }
  void TearDown() override { fs::remove_all(root_); }

  /// gen-data, train-gnn, train-explainer and evaluate into `dir`.
  void pipeline(const fs::path& dir) {
    const std::string o = " --out " + dir.string();
    const std::string data = " --dataset " + (dir / "dataset.jsonl").string();
    const std::string model = " --model " + (dir / "gcn.json").string();
    const std::string cfg = " --config " + (root_ / "cfg.txt").string();
    ASSERT_EQ(run("gen-data --num-graphs 40 --seed 3" + o), 0);
    ASSERT_EQ(run("train-gnn --epochs 5 --seed 3" + data + o), 0);
    ASSERT_EQ(run("train-explainer --seed 3" + data + model + cfg + o), 0);
    ASSERT_EQ(run("evaluate --seed 3 --noise-kind embedding --noise 0.1" + data + model + cfg + o +
                  " --explainer " + (dir / "explainer.json").string() +
                  " --confidence " + (dir / "confidence.json").string()),
              0);
  }

  fs::path root_;
};

TEST_F(Cli, SameSeedsReproduceEveryCsvByteForByte) {
  pipeline(root_ / "a");
  pipeline(root_ / "b");
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(root_ / "a")) {
    const auto name = entry.path().filename();
    if (name.extension() != ".csv" && name.extension() != ".jsonl" && name.extension() != ".json") continue;
    if (name.string().rfind("manifest-", 0) == 0) continue;  // manifests record wall-clock times
    EXPECT_EQ(gibconf::read_file(entry.path()), gibconf::read_file(root_ / "b" / name)) << name;
    ++compared;
  }
  EXPECT_GE(compared, 8u);
  EXPECT_TRUE(fs::exists(root_ / "a" / "manifest-evaluate.json"));
}

TEST_F(Cli, ContractAndParameterErrorsExitWithTwo) {
  EXPECT_EQ(run("no-such-command"), 2);
  EXPECT_EQ(run("gen-data --num-graphs 7 --out " + root_.string()), 2);
  gibconf::write_file_atomic(root_ / "bad.txt", "lr=-1\n");
  ASSERT_EQ(run("gen-data --num-graphs 10 --out " + root_.string()), 0);
  ASSERT_EQ(run("train-gnn --epochs 1 --dataset " + (root_ / "dataset.jsonl").string() + " --out " + root_.string()), 0);
  EXPECT_EQ(run("train-explainer --config " + (root_ / "bad.txt").string() + " --dataset " +
                (root_ / "dataset.jsonl").string() + " --model " + (root_ / "gcn.json").string() +
                " --out " + root_.string()),
            2);
}

TEST_F(Cli, MissingOrMalformedInputExitsWithThree) {
  EXPECT_EQ(run("train-gnn --dataset " + (root_ / "absent.jsonl").string() + " --out " + root_.string()), 3);
  gibconf::write_file_atomic(root_ / "broken.jsonl", "{\"schema\":\"gibconf-graph/1\"");
  EXPECT_EQ(run("train-gnn --dataset " + (root_ / "broken.jsonl").string() + " --out " + root_.string()), 3);
  gibconf::write_file_atomic(root_ / "unknown.txt", "gamma=1\n");
  EXPECT_EQ(run("evaluate --config " + (root_ / "unknown.txt").string() + " --out " + root_.string()), 3);
}

}  // namespace
