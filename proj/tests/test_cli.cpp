//  Copyright 2026 The despec Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>

#include "despec/image_io.hpp"
#include "despec/workflows.hpp"
#include "test_util.hpp"

using despec::testing::TempDir;

namespace {

struct Result {
  int status = -1;
  std::string output;  // stdout and stderr interleaved
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" DESPEC_CLI_PATH "' " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, HelpSucceedsAndListsSubcommands) {
  const Result r = run("--help");
  EXPECT_EQ(r.status, 0);
  for (const char* sub : {"synth", "tonefit", "train", "remove", "eval", "demo"}) {
    EXPECT_NE(r.output.find(sub), std::string::npos) << sub;
  }
  const Result t = run("train --help");
  EXPECT_EQ(t.status, 0);
  for (const char* flag : {"--manifest", "--out", "--variant", "--stage1-mode", "--paper-defaults"}) {
    EXPECT_NE(t.output.find(flag), std::string::npos) << flag;
  }
}

TEST(Cli, UnknownFlagNamesTheFlag) {
  const Result r = run("synth --out /tmp/x --frobnicate 3");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("--frobnicate"), std::string::npos) << r.output;
}

TEST(Cli, SynthWithoutOutFails) {
  const Result r = run("synth --groups 2");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("--out"), std::string::npos) << r.output;
}

TEST(Cli, MissingInputsAreUserErrors) {
  TempDir dir("cli_missing");
  EXPECT_EQ(run("tonefit --manifest " + q(dir / "nope.json")).status, 1);
  EXPECT_EQ(run("eval --pred " + q(dir / "p") + " --gt " + q(dir / "g") + " --out " + q(dir / "r.csv")).status, 1);
  EXPECT_EQ(run("synth --out " + q(dir / "d") + " --groups 1", "DESPEC_THREADS=zero").status, 1);
  EXPECT_EQ(run("train --manifest x.json").status, 1);
}

TEST(Cli, EndToEndWorkflow) {
  TempDir dir("cli_e2e");
  {
    std::ofstream f(dir / "small.ini");
    f << "[train]\nbase_width = 4\nbatch = 2\nkeep_every = 0\n";
  }
  Result r = run("synth --out " + q(dir / "data") + " --groups 4 --size 16 --seed 3");
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("seed 3"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("wall time"), std::string::npos);
  EXPECT_NE(r.output.find(despec::kVersion), std::string::npos);
  ASSERT_TRUE(std::filesystem::exists(dir / "data" / "manifest.json"));

  r = run("train --manifest " + q(dir / "data" / "manifest.json") + " --out " + q(dir / "ckpt") + " --steps 1");
  EXPECT_EQ(r.status, 1) << "training before tonefit must fail";
  EXPECT_NE(r.output.find("tonefit"), std::string::npos) << r.output;

  r = run("tonefit --manifest " + q(dir / "data" / "manifest.json"));
  ASSERT_EQ(r.status, 0) << r.output;

  r = run("train --manifest " + q(dir / "data" / "manifest.json") + " --out " + q(dir / "ckpt") +
          " --config " + q(dir / "small.ini") + " --steps 2");
  ASSERT_EQ(r.status, 0) << r.output;
  ASSERT_TRUE(std::filesystem::exists(dir / "ckpt" / "final.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "ckpt" / "config.ini"));
  EXPECT_TRUE(std::filesystem::exists(dir / "ckpt" / "loss.csv"));

  r = run("remove --ckpt " + q(dir / "ckpt" / "final.ckpt") + " --in " + q(dir / "data" / "manifest.json") +
          " --out " + q(dir / "pred") + " --split all");
  ASSERT_EQ(r.status, 0) << r.output;

  r = run("eval --pred " + q(dir / "pred") + " --gt " + q(dir / "data" / "manifest.json") + " --out " +
          q(dir / "report.csv") + " --split all");
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("mean,full"), std::string::npos) << r.output;
  EXPECT_TRUE(std::filesystem::exists(dir / "report.csv"));

  r = run("remove --ckpt " + q(dir / "ckpt" / "final.ckpt") + " --in " + q(dir / "data" / "manifest.json") +
          " --out " + q(dir / "pred_bad") + " --variant X");
  EXPECT_EQ(r.status, 1);

  std::filesystem::remove(dir / "pred" / "g00000.png");
  r = run("eval --pred " + q(dir / "pred") + " --gt " + q(dir / "data" / "manifest.json") + " --out " +
          q(dir / "report2.csv") + " --split all");
  EXPECT_EQ(r.status, 1) << r.output;
  EXPECT_NE(r.output.find("missing"), std::string::npos);
}

TEST(Cli, TonefitPair) {
  TempDir dir("cli_pair");
  despec::save_png(despec::testing::random_image(12, 12, 3, 1, 0.1f, 0.9f), dir / "gt.png");
  despec::save_png(despec::testing::random_image(12, 12, 3, 2, 0.1f, 0.9f), dir / "in.png");
  const Result r = run("tonefit --pair " + q(dir / "gt.png") + " " + q(dir / "in.png") + " --out " + q(dir / "tc.png"));
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("fit_error"), std::string::npos) << r.output;
  EXPECT_TRUE(std::filesystem::exists(dir / "tc.png"));
}
