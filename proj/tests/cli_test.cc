/*
 * Copyright 2026 The Orthocast Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "json.hpp"
#include "orthocast/cli.h"
#include "orthocast/dataset_io.h"
#include "test_util.h"

namespace orthocast {
namespace {

namespace fs = std::filesystem;
using ::orthocast::testing::RandomDataset;
using ::orthocast::testing::ScratchDir;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "orthocast");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small but complete configuration rooted at `dir`.
std::string WriteConfig(const fs::path& dir, nlohmann::ordered_json extra = {}) {
  nlohmann::ordered_json j = {
      {"seed", 3},
      {"synth", {{"n_series", 150}}},
      {"eval",
       {{"n_test_series", 80},
        {"n_contexts", 50},
        {"orthogonality_samples", 20000},
        {"orthogonality_pairs", 10},
        {"hessian_cases", 10},
        {"sweep_ns", {100, 200}},
        {"sweep_seeds", 1}}},
      {"io",
       {{"data_dir", (dir / "data").string()},
        {"model", (dir / "model.json").string()},
        {"testset", (dir / "testset.csv").string()},
        {"out_dir", (dir / "eval").string()}}},
      {"jobs", 1}};
  if (extra.is_object()) j.merge_patch(extra);
  const fs::path path = dir / "config.json";
  std::ofstream(path) << j.dump(2);
  return path.string();
}

TEST(CliTest, SynthSummaryAndReproducibility) {
  const fs::path dir = ScratchDir("cli_synth");
  const std::string cfg = WriteConfig(dir);
  const Result r = Cli({"synth", "--config", cfg});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("n_series=150 L=24 d=5"), std::string::npos) << r.out;
  for (const char* f : {"train.jsonl", "test.jsonl", "oracle.json"}) {
    EXPECT_TRUE(fs::exists(dir / "data" / f)) << f;
  }
  const std::string first = Slurp(dir / "data" / "train.jsonl");
  ASSERT_EQ(Cli({"synth", "--config", cfg}).code, kExitOk);
  EXPECT_EQ(Slurp(dir / "data" / "train.jsonl"), first);
  ASSERT_EQ(Cli({"synth", "--config", cfg, "--seed", "4"}).code, kExitOk);
  EXPECT_NE(Slurp(dir / "data" / "train.jsonl"), first);
}

TEST(CliTest, InvalidConfigNamesField) {
  const fs::path dir = ScratchDir("cli_invalid");
  const std::string cfg = WriteConfig(dir, {{"synth", {{"tau", 24}}}});
  const Result r = Cli({"synth", "--config", cfg});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("tau"), std::string::npos) << r.err;
  EXPECT_EQ(Cli({"synth", "--config", cfg, "--encoding", "ordinal"}).code, kExitConfig);
  EXPECT_EQ(Cli({}).code, kExitConfig);
}

TEST(CliTest, PipelineComposesAndReruns) {
  const fs::path dir = ScratchDir("cli_pipeline");
  const std::string cfg = WriteConfig(dir, {{"synth", {{"rdd_step_mode", true}}}});
  ASSERT_EQ(Cli({"synth", "--config", cfg}).code, kExitOk);
  const Result train = Cli({"train", "--config", cfg});
  ASSERT_EQ(train.code, kExitOk) << train.err;
  EXPECT_NE(train.out.find("fold 1 empirical R-loss"), std::string::npos);
  const Result rdd = Cli({"rdd", "--config", cfg});
  ASSERT_EQ(rdd.code, kExitOk) << rdd.err;
  EXPECT_NE(rdd.out.find("retention"), std::string::npos);
  std::istringstream lines(Slurp(dir / "testset.csv"));
  std::string line;
  int n_lines = 0;
  while (std::getline(lines, line)) ++n_lines;
  EXPECT_GT(n_lines, 1);
  const auto meta = nlohmann::json::parse(Slurp(dir / "testset.meta.json"));
  EXPECT_TRUE(meta.contains("trim_low"));
  EXPECT_TRUE(meta.contains("trim_high"));
  const Result ev = Cli({"evaluate", "--config", cfg});
  ASSERT_EQ(ev.code, kExitOk) << ev.err;
  EXPECT_NE(ev.out.find("oracle    cate_rmse"), std::string::npos) << ev.out;
  for (const char* f : {"metrics.csv", "metrics.txt", "hist_orthogonal.csv", "hist_direct.svg"}) {
    EXPECT_TRUE(fs::exists(dir / "eval" / f)) << f;
  }
  const std::vector<fs::path> outputs = {dir / "data" / "train.jsonl", dir / "model.json",
                                         dir / "testset.csv", dir / "eval" / "metrics.csv",
                                         dir / "eval" / "hist_direct.csv"};
  std::vector<std::string> before;
  for (const auto& p : outputs) before.push_back(Slurp(p));
  ASSERT_EQ(Cli({"synth", "--config", cfg}).code, kExitOk);
  ASSERT_EQ(Cli({"train", "--config", cfg}).code, kExitOk);
  ASSERT_EQ(Cli({"rdd", "--config", cfg, "--jobs", "3"}).code, kExitOk);
  ASSERT_EQ(Cli({"evaluate", "--config", cfg}).code, kExitOk);
  for (size_t i = 0; i < outputs.size(); ++i) {
    EXPECT_EQ(Slurp(outputs[i]), before[i]) << outputs[i];
  }
}

TEST(CliTest, TrainCrossFitAndErrors) {
  const fs::path dir = ScratchDir("cli_train");
  const std::string cfg = WriteConfig(dir);
  EXPECT_EQ(Cli({"train", "--config", cfg}).code, kExitData);
  ASSERT_EQ(Cli({"synth", "--config", cfg}).code, kExitOk);
  const Result r = Cli({"train", "--config", cfg, "--cross-fit"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("fold 2 empirical R-loss"), std::string::npos);
  EXPECT_NE(r.out.find("cross-fitted"), std::string::npos);
  const auto model = nlohmann::json::parse(Slurp(dir / "model.json"));
  EXPECT_EQ(model["format"], "orthocast-run-model");
  EXPECT_EQ(Cli({"train", "--config", cfg, "--encoding", "linear"}).code, kExitConfig);
  const Result missing = Cli({"evaluate", "--config", cfg, "--testset",
                              (dir / "nope.csv").string()});
  EXPECT_EQ(missing.code, kExitData);
}

TEST(CliTest, RddWithoutSwitchesWritesHeader) {
  const fs::path dir = ScratchDir("cli_noswitch");
  const std::string cfg = WriteConfig(dir);
  Dataset ds = RandomDataset(6, 20, 4, 2, {1, 1}, 1);
  for (auto& s : ds.series) s.treatments.assign(20, 1.0);
  const fs::path data = dir / "flat.jsonl";
  SaveDataset(ds, data.string(), DataFormat::kJsonl);
  const fs::path out = dir / "flat.csv";
  const Result r = Cli({"rdd", "--config", cfg, "--data", data.string(), "--out", out.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  const std::string csv = Slurp(out);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
}

TEST(CliTest, EvaluateSeedLoop) {
  const fs::path dir = ScratchDir("cli_seeds");
  const std::string cfg = WriteConfig(dir, {{"synth", {{"rdd_step_mode", true}}}});
  const Result r = Cli({"evaluate", "--config", cfg, "--seeds", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("mean +- std over 2 seeds"), std::string::npos);
  EXPECT_NE(r.out.find(" +- "), std::string::npos);
  const std::string csv = Slurp(dir / "eval" / "metrics_seeds.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_TRUE(fs::exists(dir / "eval" / "metrics_summary.txt"));
}

TEST(CliTest, CheckReportsAndFailsOnCoarseStep) {
  const fs::path dir = ScratchDir("cli_check");
  const std::string cfg = WriteConfig(dir);
  const Result r = Cli({"check", "--config", cfg, "--out", (dir / "check").string()});
  ASSERT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "check" / "check.txt"));
  const std::string csv = Slurp(dir / "check" / "check.csv");
  EXPECT_EQ(csv.rfind("check,value,threshold,status\n", 0), 0u);
  const Result coarse = Cli({"check", "--config", cfg, "--fd-step", "1",
                             "--out", (dir / "coarse").string()});
  EXPECT_EQ(coarse.code, kExitNumerical);
  EXPECT_NE(coarse.out.find("FAIL"), std::string::npos);
}

TEST(CliTest, SweepTable) {
  const fs::path dir = ScratchDir("cli_sweep");
  const std::string cfg = WriteConfig(dir);
  const Result r = Cli({"sweep", "--config", cfg, "--out", (dir / "sweep").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string csv = Slurp(dir / "sweep" / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

}  // namespace
}  // namespace orthocast
