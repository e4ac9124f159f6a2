#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "hipi/experiment.hpp"

using namespace hipi;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("hipi_experiment_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

Json rl_config() {
  return Json::parse(R"({
    "kind": "hipi_rl",
    "env": {"name": "open_grid", "rows": 3, "cols": 3, "horizon": 4},
    "strategies": ["irl", "final_state", "random", "none"],
    "seeds": [0, 1, 2, 3, 4],
    "total_env_steps": 60,
    "eval_period": 30,
    "hipi_rl": {"batch_size": 8}
  })");
}

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
  return std::any_of(errors.begin(), errors.end(), [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

}  // namespace

TEST(ValidateConfig, AcceptsSample) { EXPECT_TRUE(validate_config(rl_config()).empty()); }

TEST(ValidateConfig, ErrorsCarryFieldPaths) {
  auto config = rl_config();
  config["strategies"][1] = "hindsight";
  config["seeds"][2] = -1;
  config["hipi_rl"]["relabel_fraction"] = 2.0;
  config.erase("eval_period");
  const auto errors = validate_config(config);
  EXPECT_TRUE(mentions(errors, "strategies[1]"));
  EXPECT_TRUE(mentions(errors, "seeds[2]"));
  EXPECT_TRUE(mentions(errors, "hipi_rl.relabel_fraction"));
  EXPECT_TRUE(mentions(errors, "eval_period"));
  EXPECT_THROW(run_experiment(config, scratch_dir("invalid")), InvalidInput);
}

TEST(ValidateConfig, VerifySuiteChecked) {
  const auto config = Json::parse(R"({"kind": "verify", "seeds": [0], "verify": {"suite": "no_such_suite"}})");
  EXPECT_TRUE(mentions(validate_config(config), "verify.suite"));
}

TEST(RunExperiment, OneFilePerCellAndDeterministicMerge) {
  const auto a = scratch_dir("rl_a"), b = scratch_dir("rl_b");
  const auto first = run_experiment(rl_config(), a);
  EXPECT_TRUE(first.success);
  EXPECT_EQ(first.cells.size(), 20u);
  int files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(a / "cells")) files += entry.path().extension() == ".csv";
  EXPECT_EQ(files, 20);
  run_experiment(rl_config(), b);
  EXPECT_EQ(read_text_file(a / "merged.csv"), read_text_file(b / "merged.csv"));
  for (const auto& cell : first.cells) EXPECT_EQ(read_text_file(a / cell.file), read_text_file(b / cell.file));

  const auto merged = parse_csv(read_text_file(a / "merged.csv"));
  EXPECT_EQ(merged.header, kCurveColumns);
  EXPECT_EQ(merged.rows.front()[merged.column("strategy")], "final_state");
  EXPECT_EQ(merged.rows.back()[merged.column("strategy")], "random");
}

TEST(RunExperiment, ManifestRecordsSeedsHashAndReplays) {
  const auto a = scratch_dir("replay_a"), b = scratch_dir("replay_b");
  run_experiment(rl_config(), a);
  const auto manifest = read_json_file(a / "manifest.json");
  EXPECT_EQ(manifest["schema_version"], kSchemaVersion);
  EXPECT_EQ(manifest["seeds"], Json({0, 1, 2, 3, 4}));
  EXPECT_EQ(manifest["config_hash"], sha256_hex(rl_config().dump()));
  EXPECT_EQ(manifest["failed_cells"], 0);
  EXPECT_TRUE(manifest.contains("commit"));
  EXPECT_TRUE(manifest.contains("wall_time_seconds"));
  run_experiment(manifest, b);
  EXPECT_EQ(read_text_file(a / "merged.csv"), read_text_file(b / "merged.csv"));
  auto replayed = read_json_file(b / "manifest.json");
  auto original = manifest;
  replayed.erase("wall_time_seconds");
  original.erase("wall_time_seconds");
  EXPECT_EQ(replayed, original);
}

TEST(RunExperiment, CellErrorsGiveAPartialFailureManifest) {
  auto config = rl_config();
  config["strategies"] = {"none", "final_state"};
  config["seeds"] = Json::parse("[0]");
  config["env"] = {{"name", "two_task_chain"}};
  const auto out = run_experiment(config, scratch_dir("partial"));
  EXPECT_FALSE(out.success);
  EXPECT_EQ(out.manifest["failed_cells"], 1);
  EXPECT_EQ(out.manifest["cells"][0]["strategy"], "final_state");
  EXPECT_EQ(out.manifest["cells"][0]["status"], "error");
  EXPECT_EQ(out.manifest["cells"][1]["status"], "ok");
}

TEST(RunExperiment, VerifyKindPropagatesFailure) {
  const auto ok = run_experiment(
      Json::parse(R"({"kind": "verify", "seeds": [1], "verify": {"suite": "relabel_kl", "instances": 5}})"),
      scratch_dir("verify_ok"));
  EXPECT_TRUE(ok.success);
  const auto bad = run_experiment(
      Json::parse(R"({"kind": "verify", "seeds": [1], "verify": {"suite": "her", "grid_size": 8, "horizon": 6}})"),
      scratch_dir("verify_bad"));
  EXPECT_FALSE(bad.success);
}

TEST(RunExperiment, BehaviorCloningCells) {
  const auto config = Json::parse(R"({
    "kind": "hipi_bc", "env": {"name": "two_task_chain"}, "strategies": ["irl", "unnormalized", "task_agnostic"],
    "seeds": [0], "hipi_bc": {"demos_per_task": 5, "bias": {"task": 0, "value": 5}}})");
  const auto dir = scratch_dir("bc");
  const auto out = run_experiment(config, dir);
  EXPECT_TRUE(out.success);
  const auto merged = parse_csv(read_text_file(dir / "merged.csv"));
  EXPECT_EQ(merged.header, kBcColumns);
  EXPECT_EQ(merged.rows.size(), 6u);
}

TEST(ExportSummary, SingleSeedHasZeroStd) {
  const std::string merged =
      "env_step,strategy,seed,task_index,avg_return,success_rate\n"
      "0,irl,3,0,-2,0\n0,irl,3,1,-4,1\n10,irl,3,0,-1,1\n10,irl,3,1,-1,1\n";
  const auto table = parse_csv(export_summary(merged));
  EXPECT_EQ(table.header, kSummaryColumns);
  ASSERT_EQ(table.rows.size(), 2u);
  for (const auto& row : table.rows) {
    EXPECT_EQ(row[table.column("std_return")], "0");
    EXPECT_EQ(row[table.column("std_success")], "0");
  }
  EXPECT_EQ(table.rows[0][table.column("mean_return")], "-3");
  EXPECT_EQ(table.rows[0][table.column("mean_success")], "0.5");
}

TEST(ExportSummary, IdenticalCurvesHaveZeroStd) {
  std::string merged = "env_step,strategy,seed,task_index,avg_return,success_rate\n";
  for (int seed = 0; seed < 5; ++seed) merged += "5,none," + std::to_string(seed) + ",0,0.25,0.75\n";
  const auto table = parse_csv(export_summary(merged));
  EXPECT_EQ(table.rows[0][table.column("num_seeds")], "5");
  EXPECT_EQ(table.rows[0][table.column("std_return")], "0");
}

TEST(ExportSummary, HandBuiltTwoRowFixture) {
  // Seeds give returns 1 and 3: mean 2, population std 1. Success 0 and 1: mean 0.5, std 0.5.
  const std::string merged =
      "env_step,strategy,seed,task_index,avg_return,success_rate\n"
      "100,random,0,0,1,0\n100,random,1,0,3,1\n";
  const auto table = parse_csv(export_summary(merged));
  ASSERT_EQ(table.rows.size(), 1u);
  const auto& row = table.rows[0];
  EXPECT_EQ(row[table.column("mean_return")], "2");
  EXPECT_EQ(row[table.column("std_return")], "1");
  EXPECT_EQ(row[table.column("mean_success")], "0.5");
  EXPECT_EQ(row[table.column("std_success")], "0.5");
}

TEST(ExportSummary, MalformedCsvRejected) {
  EXPECT_THROW(export_summary("env_step,strategy\n0,irl\n"), InvalidInput);
  EXPECT_THROW(export_summary("env_step,strategy,seed,task_index,avg_return,success_rate\n0,irl,0,0,abc,1\n"),
               InvalidInput);
  EXPECT_THROW(export_summary("env_step,strategy,seed,task_index,avg_return,success_rate\n0,irl,0\n"), InvalidInput);
}

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(OutputRoot, EnvironmentOverride) {
  setenv("HIPI_OUT_ROOT", "/tmp/hipi_root_test", 1);
  EXPECT_EQ(default_output_root(), std::filesystem::path("/tmp/hipi_root_test"));
  unsetenv("HIPI_OUT_ROOT");
  EXPECT_EQ(default_output_root(), std::filesystem::path("results"));
}
