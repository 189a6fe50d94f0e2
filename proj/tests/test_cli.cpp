// Copyright 2026 The exposurerec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd = std::string(EXREC_BINARY) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
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
    root_ = fs::temp_directory_path() /
            ("exrec_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string dir(const std::string& name) const { return (root_ / name).string(); }

  fs::path root_;
};

constexpr const char* kSmallData = "--users 40 --items 20 --factors 4 --steps 12 --seed 3";
constexpr const char* kSmallModel =
    "--d 8 --heads 2 --layers 1 --t-max 5 --window 4 --epochs 2 --patience 2";

TEST_F(Cli, GenDataIsDeterministic) {
  ASSERT_EQ(run(std::string("gen-data ") + kSmallData + " --out " + dir("a")), 0);
  ASSERT_EQ(run(std::string("gen-data ") + kSmallData + " --out " + dir("b")), 0);
  for (const char* f : {"world.bin", "logs.txt", "train.txt", "valid.txt", "test.txt"}) {
    const std::string a = slurp(root_ / "a" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(root_ / "b" / f)) << f;
  }
  EXPECT_TRUE(fs::exists(root_ / "a" / "gen-data.manifest"));
  ASSERT_EQ(run("gen-data --users 40 --items 20 --factors 4 --steps 12 --seed 4 --out " +
                dir("c")),
            0);
  EXPECT_NE(slurp(root_ / "a" / "logs.txt"), slurp(root_ / "c" / "logs.txt"));
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("evaluate --test x.txt --out " + dir("e")), 2);
  EXPECT_NE(run("frobnicate"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("--version"), 0);
  EXPECT_EQ(run("gen-data --policy greedy --out " + dir("g")), 2);
}

TEST_F(Cli, RuntimeErrorsExitNonZero) {
  EXPECT_NE(run("train-sim --train /nonexistent/train.txt --out " + dir("s")), 0);
  std::ofstream(root_ / "bad.txt") << "#items 5\n1 9:1\n";
  EXPECT_EQ(run("train-sim --train " + (root_ / "bad.txt").string() + " --out " + dir("s")), 1);
}

TEST_F(Cli, PipelineAndBitExactRerun) {
  const std::string data = dir("data");
  ASSERT_EQ(run(std::string("gen-data ") + kSmallData + " --out " + data), 0);
  ASSERT_EQ(run(std::string("train-sim ") + kSmallModel + " --train " + data + "/train.txt --valid " +
                data + "/valid.txt --out " + dir("sim")),
            0);
  ASSERT_EQ(run(std::string("train-rec ") + kSmallModel + " --train " + data +
                "/train.txt --valid " + data + "/valid.txt --augment random --simulator " +
                dir("sim") + "/simulator.ckpt --aug-epochs 1 --out " + dir("rec")),
            0);
  // Augmentation without a simulator is a usage error.
  EXPECT_EQ(run(std::string("train-rec ") + kSmallModel + " --train " + data +
                "/train.txt --augment random --out " + dir("rec2")),
            2);
  ASSERT_EQ(run("evaluate --checkpoint " + dir("rec") + "/recommender.ckpt --test " + data +
                "/test.txt --world " + data + "/world.bin --ks 5,10 --out " + dir("eval")),
            0);
  EXPECT_TRUE(fs::exists(root_ / "eval" / "metrics.tsv"));
  EXPECT_TRUE(fs::exists(root_ / "eval" / "metrics.oracle.tsv"));
  ASSERT_EQ(run("report --run random,1," + dir("eval") + "/metrics.tsv --sweep-label random --k 10" +
                " --out " + dir("report")),
            0);
  const std::string sweep = slurp(root_ / "report" / "sweep.tsv");
  EXPECT_EQ(sweep.rfind("# label=random K=10\n", 0), 0u);
  EXPECT_NE(slurp(root_ / "report" / "summary.tsv").find("random"), std::string::npos);
  EXPECT_EQ(run("recommend --checkpoint " + dir("rec") + "/recommender.ckpt --items 1,2,3 --k 4"), 0);

  struct Step {
    const char* dir;
    const char* manifest;
    std::vector<const char*> files;
  };
  const std::vector<Step> steps{
      {"data", "gen-data", {"world.bin", "logs.txt", "train.txt", "valid.txt", "test.txt"}},
      {"sim", "train-sim", {"simulator.ckpt", "simulator_training.tsv"}},
      {"rec", "train-rec", {"recommender.ckpt", "recommender_training.tsv", "augmented.txt"}},
      {"eval", "evaluate", {"metrics.tsv", "metrics.oracle.tsv"}},
      {"report", "report", {"summary.tsv", "sweep.tsv"}}};
  for (const auto& s : steps) {
    const fs::path manifest = root_ / s.dir / (std::string(s.manifest) + ".manifest");
    ASSERT_TRUE(fs::exists(manifest)) << manifest;
    const std::string replay = dir(std::string("replay_") + s.dir);
    ASSERT_EQ(run("rerun --manifest " + manifest.string() + " --out " + replay), 0) << s.manifest;
    for (const char* f : s.files) {
      const std::string original = slurp(root_ / s.dir / f);
      EXPECT_FALSE(original.empty()) << s.dir << "/" << f;
      EXPECT_EQ(original, slurp(fs::path(replay) / f)) << s.dir << "/" << f;
    }
    EXPECT_TRUE(fs::exists(fs::path(replay) / (std::string(s.manifest) + ".manifest")));
  }
}

}  // namespace
