#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hipi/hipi_bc.hpp"
#include "hipi/hipi_rl.hpp"
#include "hipi/io.hpp"

namespace hipi {

/// Version of the CSV column layouts and the manifest.
inline constexpr int kSchemaVersion = 1;

inline const std::vector<std::string> kCurveColumns = {"env_step", "strategy", "seed", "task_index", "avg_return",
                                                       "success_rate"};
inline const std::vector<std::string> kSummaryColumns = {"strategy", "env_step", "num_seeds", "mean_return",
                                                         "std_return", "mean_success", "std_success"};
inline const std::vector<std::string> kBcColumns = {"mode", "seed", "task_index", "avg_return", "success_rate"};
inline const std::vector<std::string> kVerifyColumns = {"suite", "seed", "instance", "margin", "pass"};

/// Field-path errors for an experiment config; empty when valid.
std::vector<std::string> validate_config(const Json& config);

/// Environment named by a config's "env" (and optional "tasks") section.
Environment build_environment(const Json& env, const Json& tasks, const std::filesystem::path& base_dir = {});

HipiRlConfig rl_config_from_json(const Json& section, const Json& config);

/// Demonstrations drawn from the soft-optimal policies: `per_task` rollouts per task,
/// labelled with the task that generated them.
DemonstrationSet sample_demonstrations(const TabularMdp& mdp, const TaskFamily& tasks, int per_task,
                                       std::uint64_t seed);

struct CellOutcome {
  std::string strategy;
  std::uint64_t seed = 0;
  std::string file;
  bool ok = false;
  bool passed = true;  // verify cells: every instance passed
  std::string error;
};

struct ExperimentOutcome {
  std::filesystem::path out_dir;
  std::vector<CellOutcome> cells;
  Json manifest;
  /// Every cell ran without error (and every verify check passed).
  bool success = true;
};

/// Runs each (strategy, seed) cell on an OpenMP worker pool, writes one CSV per cell,
/// a merged CSV ordered by (strategy, seed), and manifest.json. Only the manifest's
/// wall_time_seconds changes between identical reruns. A config holding a "config"
/// key (a previous manifest) is replayed from it.
ExperimentOutcome run_experiment(const Json& config, const std::filesystem::path& out_dir,
                                 const std::filesystem::path& base_dir = {});

/// Mean and population std across seeds of the task-averaged return and success, per
/// (strategy, env_step).
std::string export_summary(const std::string& merged_csv);

/// Hex SHA-256 of the text.
std::string sha256_hex(const std::string& text);

/// Output root: $HIPI_OUT_ROOT when set, else "results".
std::filesystem::path default_output_root();

}  // namespace hipi
