/* Copyright 2026 The ascprobe Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <json.hpp>

#include <fstream>

#include <sys/stat.h>
#include <unistd.h>

#include "test_support.hpp"

namespace ascprobe {
namespace {

namespace fs = std::filesystem;
using test::run_command;
using test::scratch_dir;

std::string cli(const std::string& args) { return std::string(ASCPROBE_CLI_PATH) + " " + args; }

const char* kSmallModel =
    "--embedding-dim 4 --hidden1 6 --hidden2 5 --batch-size 8 --train-fraction 0.75";

TEST(CliTest, GenerateDefaultCorpus) {
  const auto dir = scratch_dir("cli_gen");
  const auto r = run_command(cli("generate --out " + dir.string()));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const std::string text = test::read_file(dir / "corpus.jsonl");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2000);
  EXPECT_NE(r.output.find("transitive     500"), std::string::npos) << r.output;
  EXPECT_TRUE(fs::exists(dir / "vocab.json"));
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(CliTest, GenerateEmptyCorpus) {
  const auto dir = scratch_dir("cli_empty");
  const auto r = run_command(cli("generate --n-per-class 0 --json --out " + dir.string()));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto j = nlohmann::json::parse(r.output);
  EXPECT_EQ(j["counts"]["transitive"], 0);
}

TEST(CliTest, UnwritableDirectoryExitsOne) {
  if (::geteuid() == 0) {
    // Permission bits do not stop root; use a path below a regular file.
    const auto dir = scratch_dir("cli_unwritable");
    test::run_command("touch " + (dir / "file").string());
    const fs::path target = dir / "file" / "out";
    const auto r = run_command(cli("generate --out " + target.string()));
    EXPECT_EQ(r.exit_code, 1) << r.output;
    EXPECT_NE(r.output.find(target.string()), std::string::npos) << r.output;
    return;
  }
  const auto dir = scratch_dir("cli_unwritable");
  ::chmod(dir.c_str(), 0500);
  const auto r = run_command(cli("generate --out " + (dir / "x").string()));
  ::chmod(dir.c_str(), 0700);
  EXPECT_EQ(r.exit_code, 1) << r.output;
  EXPECT_NE(r.output.find((dir / "x").string()), std::string::npos) << r.output;
}

TEST(CliTest, InsufficientCombinationsExitsTwo) {
  const auto dir = scratch_dir("cli_insufficient");
  const auto r = run_command(cli("generate --n-per-class 100000000 --out " + dir.string()));
  EXPECT_EQ(r.exit_code, 2) << r.output;
  EXPECT_NE(r.output.find("InsufficientCombinations"), std::string::npos);
}

TEST(CliTest, BadFlagValuesExitTwo) {
  EXPECT_EQ(run_command(cli("analyze --pooling max")).exit_code, 2);
  EXPECT_EQ(run_command(cli("analyze --method pca")).exit_code, 2);
  EXPECT_EQ(run_command(cli("frobnicate")).exit_code, 2);
  EXPECT_EQ(run_command(cli("--help")).exit_code, 0);
}

TEST(CliTest, TrainOneEpochAndDeterminism) {
  const auto a = scratch_dir("cli_train_a");
  const auto b = scratch_dir("cli_train_b");
  for (const auto& dir : {a, b}) {
    ASSERT_EQ(run_command(cli("generate --n-per-class 20 --out " + dir.string())).exit_code, 0);
    const auto r = run_command(cli("train --epochs 1 " + std::string(kSmallModel) + " --out " +
                                   dir.string()));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("val accuracy"), std::string::npos);
    EXPECT_NE(r.output.find("perplexity"), std::string::npos);
  }
  const std::string log = test::read_file(a / "train_log.csv");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 2);
  EXPECT_EQ(test::read_file(a / "model.ckpt"), test::read_file(b / "model.ckpt"));
}

TEST(CliTest, TrainWithoutCorpusExitsTwo) {
  const auto dir = scratch_dir("cli_nocorpus");
  EXPECT_EQ(run_command(cli("train --out " + dir.string())).exit_code, 2);
}

TEST(CliTest, AnalyzeAndReport) {
  const auto dir = scratch_dir("cli_analyze");
  const std::string out = " --out " + dir.string();
  ASSERT_EQ(run_command(cli("generate --n-per-class 20" + out)).exit_code, 0);
  ASSERT_EQ(run_command(cli("train --epochs 1 " + std::string(kSmallModel) + out)).exit_code, 0);
  const auto r = run_command(cli("analyze --method mds" + out));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir / "mds_output.svg"));
  EXPECT_FALSE(fs::exists(dir / "tsne_output.csv"));

  const auto rep = run_command(cli("report " + dir.string()));
  ASSERT_EQ(rep.exit_code, 0) << rep.output;
  EXPECT_NE(rep.output.find("<- min"), std::string::npos);
  const bool yes = rep.output.find("matches paper: yes") != std::string::npos;
  const bool no = rep.output.find("matches paper: no") != std::string::npos;
  EXPECT_TRUE(yes != no) << rep.output;

  const auto js = run_command(cli("report --json " + dir.string()));
  ASSERT_EQ(js.exit_code, 0);
  const auto j = nlohmann::json::parse(js.output);
  EXPECT_EQ(j["layers"].size(), 4u);
  EXPECT_EQ(j["matches_paper"].get<bool>(), yes);

  fs::remove(dir / "mds_lstm2.csv");
  const auto missing = run_command(cli("report " + dir.string()));
  EXPECT_EQ(missing.exit_code, 2);
  EXPECT_NE(missing.output.find("mds_lstm2.csv"), std::string::npos) << missing.output;
}

TEST(CliTest, AnalyzeVocabMismatchExitsTwo) {
  const auto a = scratch_dir("cli_vm_a");
  const auto b = scratch_dir("cli_vm_b");
  ASSERT_EQ(run_command(cli("generate --n-per-class 20 --out " + a.string())).exit_code, 0);
  ASSERT_EQ(run_command(cli("train --epochs 1 " + std::string(kSmallModel) + " --out " +
                            a.string())).exit_code, 0);
  ASSERT_EQ(run_command(cli("generate --n-per-class 5 --seed 2 --out " + b.string())).exit_code,
            0);
  const auto r = run_command(cli("analyze --method mds --checkpoint " +
                                 (a / "model.ckpt").string() + " --corpus " + b.string() +
                                 " --out " + b.string()));
  EXPECT_EQ(r.exit_code, 2) << r.output;
  EXPECT_NE(r.output.find("VocabMismatch"), std::string::npos);
}

TEST(CliTest, ConfigFileAndFlagPrecedence) {
  const auto dir = scratch_dir("cli_config");
  {
    std::ofstream f(dir / "cfg.json");
    f << R"({"generate": {"n_per_class": 7, "seed": 5}})";
  }
  const std::string base = "generate --json --config " + (dir / "cfg.json").string() + " --out ";
  auto r = run_command(cli(base + (dir / "a").string()));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(nlohmann::json::parse(r.output)["counts"]["resultative"], 7);
  r = run_command(cli(base + (dir / "b").string() + " --n-per-class 3"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(nlohmann::json::parse(r.output)["counts"]["resultative"], 3);
  const auto manifest = nlohmann::json::parse(test::read_file(dir / "b" / "manifest.json"));
  EXPECT_EQ(manifest["config"]["generate"]["n_per_class"], 3);
  EXPECT_EQ(manifest["config"]["generate"]["seed"], 5);
}

TEST(CliTest, DumpGrammarRoundTrips) {
  const auto dir = scratch_dir("cli_grammar");
  const fs::path g = dir / "grammar.json";
  ASSERT_EQ(run_command(cli("generate --dump-grammar " + g.string())).exit_code, 0);
  const auto a = run_command(cli("generate --n-per-class 10 --out " + (dir / "a").string()));
  const auto b = run_command(cli("generate --n-per-class 10 --grammar " + g.string() +
                                 " --out " + (dir / "b").string()));
  ASSERT_EQ(a.exit_code, 0);
  ASSERT_EQ(b.exit_code, 0) << b.output;
  EXPECT_EQ(test::read_file(dir / "a" / "corpus.jsonl"),
            test::read_file(dir / "b" / "corpus.jsonl"));
}

}  // namespace
}  // namespace ascprobe
