#include "hipi/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>

#include "hipi/envs.hpp"
#include "hipi/evaluation.hpp"
#include "hipi/verification.hpp"

namespace hipi {

namespace {

const std::set<std::string> kKinds = {"hipi_rl", "hipi_bc", "verify"};
const std::set<std::string> kSuites = {"relabel_kl", "relabel_bound", "optimality", "duality", "bias", "her"};
const std::set<std::string> kEnvNames = {"crossing", "four_rooms", "open_grid", "random", "two_task_chain"};

void require_int(const Json& obj, const std::string& path, const char* key, long min, std::vector<std::string>& errors,
                 bool required = true) {
  if (!obj.contains(key)) {
    if (required) errors.push_back(path + key + ": missing");
    return;
  }
  if (!obj[key].is_number_integer() || obj[key].get<long>() < min)
    errors.push_back(path + key + ": expected an integer >= " + std::to_string(min));
}

void require_number(const Json& obj, const std::string& path, const char* key, double lo, double hi,
                    std::vector<std::string>& errors) {
  if (!obj.contains(key)) return;
  if (!obj[key].is_number() || obj[key].get<double>() < lo || obj[key].get<double>() > hi)
    errors.push_back(path + key + ": expected a number in [" + format_double(lo) + ", " + format_double(hi) + "]");
}

std::string git_commit() {
  std::string out;
  if (FILE* pipe = popen("git rev-parse HEAD 2>/dev/null", "r")) {
    char buf[128];
    while (fgets(buf, sizeof buf, pipe)) out += buf;
    pclose(pipe);
  }
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out.empty() ? "unknown" : out;
}

std::string curve_rows(const std::vector<CurveRecord>& curve, const std::string& strategy, std::uint64_t seed) {
  std::string text;
  for (const auto& r : curve) {
    text += std::to_string(r.env_step) + "," + strategy + "," + std::to_string(seed) + "," + std::to_string(r.task) +
            "," + format_double(r.avg_return) + "," + format_double(r.success_rate) + "\n";
  }
  return text;
}

std::string header_line(const std::vector<std::string>& columns) { return CsvWriter(columns).str(); }

struct CellResult {
  std::string rows;
  bool passed = true;
};

CellResult run_rl_cell(const Json& config, const Environment& env, const std::string& strategy, std::uint64_t seed) {
  auto rl = rl_config_from_json(config.value("hipi_rl", Json::object()), config);
  rl.seed = seed;
  std::vector<Trajectory> dataset;
  if (config.value("dataset", "") == "crossing") dataset = make_crossing_gridworld().demos.trajectories;
  const auto result = run_hipi_rl(env.mdp, env.tasks, strategy_from_string(strategy), rl, dataset);
  return {curve_rows(result.curve, strategy, seed), true};
}

CellResult run_bc_cell(const Json& config, const Environment& env, const std::string& mode, std::uint64_t seed) {
  const Json section = config.value("hipi_bc", Json::object());
  const auto demos = sample_demonstrations(env.mdp, env.tasks, section.value("demos_per_task", 50), seed);
  auto relabel_tasks = env.tasks;
  if (section.contains("bias")) {
    relabel_tasks = env.tasks.with_bias(section["bias"].value("task", 0), section["bias"].value("value", 0.0));
  }
  BcOptions options;
  options.sample_labels = section.value("sample_labels", false);
  options.smoothing = section.value("smoothing", 1.0);
  const auto result = run_hipi_bc(demos, env.mdp, relabel_tasks, bc_mode_from_string(mode), seed, options);
  const auto eval = evaluate_policy_exact(result.policy, env.mdp, env.tasks);
  std::string text;
  for (int k = 0; k < env.tasks.num_tasks(); ++k) {
    text += mode + "," + std::to_string(seed) + "," + std::to_string(k) + "," + format_double(eval.avg_return[k]) + "," +
            format_double(eval.success[k]) + "\n";
  }
  return {text, true};
}

CellResult run_verify_cell(const Json& config, const std::string& suite, std::uint64_t seed) {
  const Json section = config.value("verify", Json::object());
  CellResult out;
  auto row = [&](int instance, double margin, bool pass) {
    out.rows += suite + "," + std::to_string(seed) + "," + std::to_string(instance) + "," + format_double(margin) + "," +
                (pass ? "1" : "0") + "\n";
    out.passed = out.passed && pass;
  };
  if (suite == "bias") {
    const std::vector<double> biases = section.value("biases", std::vector<double>{0.0, 8.0, -8.0});
    for (std::size_t i = 0; i < biases.size(); ++i) {
      const auto report = bias_demo(biases[i]);
      const bool identity = report.normalized_assignment == std::vector<int>{0, 1};
      row(static_cast<int>(i), report.normalized_posterior[0][0] - report.normalized_posterior[0][1], identity);
    }
    return out;
  }
  if (suite == "her") {
    const int size = section.value("grid_size", 4);
    const auto grid = make_open_grid(size, size, section.value("horizon", 3));
    const auto her = check_her_equivalence(grid.mdp);
    row(0, static_cast<double>(her.exact_deltas) - static_cast<double>(her.trajectories), her.pass);
    return out;
  }
  SweepConfig sweep;
  sweep.instances = section.value("instances", 100);
  sweep.seed = seed;
  sweep.alternatives = section.value("alternatives", 20);
  for (const auto& rec : run_sweep(sweep)) {
    if (suite == "relabel_kl") row(rec.index, rec.relabel_check.kl_before - rec.relabel_check.kl_after, rec.kl_pass);
    if (suite == "relabel_bound")
      row(rec.index, rec.relabel_check.improvement - rec.relabel_check.lower_bound,
          rec.relabel_check.pass && std::abs(rec.relabel_check.residual) <= kVerifyTolerance);
    if (suite == "optimality") row(rec.index, rec.optimality.min_margin, rec.optimality.pass);
    if (suite == "duality") row(rec.index, -rec.duality_gap, rec.duality_pass);
  }
  return out;
}

}  // namespace

std::filesystem::path default_output_root() {
  const char* root = std::getenv("HIPI_OUT_ROOT");
  return root && *root ? std::filesystem::path(root) : std::filesystem::path("results");
}

std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::vector<std::string> validate_config(const Json& config) {
  std::vector<std::string> errors;
  if (!config.is_object()) return {"(root): expected an object"};
  if (config.contains("schema_version") && config["schema_version"] != kSchemaVersion)
    errors.push_back("schema_version: unsupported version " + config["schema_version"].dump());
  std::string kind;
  if (!config.contains("kind")) {
    errors.push_back("kind: missing");
  } else if (!config["kind"].is_string() || !kKinds.count(config["kind"].get<std::string>())) {
    errors.push_back("kind: expected one of hipi_rl, hipi_bc, verify");
  } else {
    kind = config["kind"].get<std::string>();
  }

  if (!config.contains("seeds")) {
    errors.push_back("seeds: missing");
  } else if (!config["seeds"].is_array() || config["seeds"].empty()) {
    errors.push_back("seeds: expected a nonempty array");
  } else {
    for (std::size_t i = 0; i < config["seeds"].size(); ++i) {
      if (!config["seeds"][i].is_number_unsigned())
        errors.push_back("seeds[" + std::to_string(i) + "]: expected a nonnegative integer");
    }
  }

  if (kind == "verify") {
    const Json section = config.value("verify", Json::object());
    if (!section.contains("suite") || !section["suite"].is_string() ||
        !kSuites.count(section["suite"].get<std::string>()))
      errors.push_back("verify.suite: expected one of relabel_kl, relabel_bound, optimality, duality, bias, her");
    require_int(section, "verify.", "instances", 1, errors, false);
    require_int(section, "verify.", "alternatives", 1, errors, false);
    return errors;
  }
  if (kind.empty()) return errors;

  if (!config.contains("strategies")) {
    errors.push_back("strategies: missing");
  } else if (!config["strategies"].is_array() || config["strategies"].empty()) {
    errors.push_back("strategies: expected a nonempty array");
  } else {
    for (std::size_t i = 0; i < config["strategies"].size(); ++i) {
      const auto& s = config["strategies"][i];
      const std::string path = "strategies[" + std::to_string(i) + "]";
      if (!s.is_string()) {
        errors.push_back(path + ": expected a string");
        continue;
      }
      try {
        if (kind == "hipi_rl")
          strategy_from_string(s.get<std::string>());
        else
          bc_mode_from_string(s.get<std::string>());
      } catch (const std::invalid_argument& e) {
        errors.push_back(path + ": " + e.what());
      }
    }
  }

  if (!config.contains("env")) {
    errors.push_back("env: missing");
  } else if (!config["env"].is_object()) {
    errors.push_back("env: expected an object");
  } else {
    const auto& env = config["env"];
    if (env.contains("file")) {
      if (!env["file"].is_string()) errors.push_back("env.file: expected a path string");
    } else if (!env.contains("name") || !env["name"].is_string() || !kEnvNames.count(env["name"].get<std::string>())) {
      errors.push_back("env.name: expected one of crossing, four_rooms, open_grid, random, two_task_chain");
    } else {
      require_int(env, "env.", "dilation", 1, errors, false);
      require_int(env, "env.", "horizon", 1, errors, false);
      require_int(env, "env.", "rows", 1, errors, false);
      require_int(env, "env.", "cols", 1, errors, false);
      require_number(env, "env.", "slip", 0.0, 1.0, errors);
    }
  }

  if (kind == "hipi_rl") {
    require_int(config, "", "total_env_steps", 0, errors);
    require_int(config, "", "eval_period", 1, errors);
    if (config.contains("hipi_rl")) {
      const auto& rl = config["hipi_rl"];
      if (!rl.is_object()) {
        errors.push_back("hipi_rl: expected an object");
      } else {
        require_number(rl, "hipi_rl.", "learning_rate", 1e-12, 1.0, errors);
        require_number(rl, "hipi_rl.", "relabel_fraction", 0.0, 1.0, errors);
        require_int(rl, "hipi_rl.", "batch_size", 1, errors, false);
        require_int(rl, "hipi_rl.", "updates_per_env_step", 0, errors, false);
        require_int(rl, "hipi_rl.", "buffer_capacity", 1, errors, false);
        require_int(rl, "hipi_rl.", "logz_refresh_interval", 1, errors, false);
        require_int(rl, "hipi_rl.", "future_window", 1, errors, false);
        require_int(rl, "hipi_rl.", "offline_updates", 0, errors, false);
      }
    }
  }
  return errors;
}

Environment build_environment(const Json& env, const Json& tasks, const std::filesystem::path& base_dir) {
  if (env.contains("file")) {
    const auto path = base_dir / env["file"].get<std::string>();
    return env_from_json(read_json_file(path), path.parent_path());
  }
  const std::string name = env.at("name").get<std::string>();
  if (name == "crossing") {
    auto c = make_crossing_gridworld();
    return {std::move(c.world.mdp), std::move(c.tasks)};
  }
  if (name == "two_task_chain") {
    auto c = make_two_task_chain();
    return {std::move(c.mdp), std::move(c.tasks)};
  }
  std::optional<TabularMdp> mdp;
  if (name == "four_rooms") {
    std::optional<int> start;
    if (env.contains("start")) start = env["start"].get<int>();
    mdp = make_four_rooms(env.value("dilation", 3), env.value("slip", 0.0), env.value("horizon", 12), start).mdp;
  } else if (name == "open_grid") {
    mdp = make_open_grid(env.value("rows", 4), env.value("cols", 4), env.value("horizon", 3), env.value("slip", 0.0),
                         env.value("start", 0))
              .mdp;
  } else if (name == "random") {
    RandomMdpSizes sizes;
    sizes.num_states = env.value("num_states", 3);
    sizes.num_actions = env.value("num_actions", 2);
    sizes.horizon = env.value("horizon", 2);
    sizes.deterministic = env.value("deterministic", false);
    mdp = make_random_mdp(env.value("seed", std::uint64_t{0}), sizes);
  } else {
    throw InvalidInput("env.name: unknown environment '" + name + "'");
  }
  if (tasks.is_null() || tasks.empty() || tasks.value("kind", "goal") == "goal") {
    std::optional<std::vector<int>> goals;
    const Json g = tasks.is_object() ? tasks.value("goals", Json("all")) : Json("all");
    if (g == "reachable") {
      goals = reachable_states(*mdp, mdp->horizon() - 1);
    } else if (g.is_array()) {
      goals = g.get<std::vector<int>>();
    }
    return {*mdp, make_goal_family(*mdp, goals)};
  }
  if (tasks.value("kind", "") == "random") {
    return {*mdp, make_random_tasks(*mdp, tasks.value("num_tasks", 2), tasks.value("seed", std::uint64_t{0}))};
  }
  return {*mdp, tasks_from_json(tasks, *mdp, base_dir)};
}

HipiRlConfig rl_config_from_json(const Json& section, const Json& config) {
  HipiRlConfig rl;
  rl.learning_rate = section.value("learning_rate", rl.learning_rate);
  rl.relabel_fraction = section.value("relabel_fraction", rl.relabel_fraction);
  rl.batch_size = section.value("batch_size", rl.batch_size);
  rl.updates_per_env_step = section.value("updates_per_env_step", rl.updates_per_env_step);
  rl.buffer_capacity = section.value("buffer_capacity", rl.buffer_capacity);
  rl.logz_refresh_interval = section.value("logz_refresh_interval", rl.logz_refresh_interval);
  rl.future_window = section.value("future_window", rl.future_window);
  rl.discount = section.value("discount", rl.discount);
  rl.offline_updates = section.value("offline_updates", rl.offline_updates);
  if (section.contains("initial_q")) {
    rl.initial_q = section["initial_q"] == "sentinel" ? kDefaultSentinel : section["initial_q"].get<double>();
  }
  rl.total_env_steps = config.value("total_env_steps", rl.total_env_steps);
  rl.eval_period = config.value("eval_period", rl.eval_period);
  return rl;
}

DemonstrationSet sample_demonstrations(const TabularMdp& mdp, const TaskFamily& tasks, int per_task,
                                       std::uint64_t seed) {
  if (per_task <= 0) throw InvalidInput("demos_per_task must be positive");
  const auto policy = soft_optimal_policy(soft_value_iteration(mdp, tasks)).policy;
  Rng rng(seed);
  DemonstrationSet demos;
  for (int k = 0; k < tasks.num_tasks(); ++k) {
    for (int i = 0; i < per_task; ++i) demos.trajectories.push_back(rollout(policy, mdp, k, rng));
  }
  return demos;
}

ExperimentOutcome run_experiment(const Json& input, const std::filesystem::path& out_dir,
                                 const std::filesystem::path& base_dir) {
  const Json config = input.contains("config") ? input["config"] : input;
  const auto errors = validate_config(config);
  if (!errors.empty()) {
    std::string msg = "invalid config";
    for (const auto& e : errors) msg += "; " + e;
    throw InvalidInput(msg);
  }
  const auto started = std::chrono::steady_clock::now();
  const std::string kind = config["kind"].get<std::string>();
  std::vector<std::string> strategies;
  if (kind == "verify")
    strategies = {config["verify"]["suite"].get<std::string>()};
  else
    strategies = config["strategies"].get<std::vector<std::string>>();
  std::sort(strategies.begin(), strategies.end());
  strategies.erase(std::unique(strategies.begin(), strategies.end()), strategies.end());
  auto seeds = config["seeds"].get<std::vector<std::uint64_t>>();
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

  const auto& columns = kind == "hipi_rl" ? kCurveColumns : kind == "hipi_bc" ? kBcColumns : kVerifyColumns;
  std::optional<Environment> env;
  if (kind != "verify") env = build_environment(config["env"], config.value("tasks", Json()), base_dir);

  ExperimentOutcome outcome;
  outcome.out_dir = out_dir;
  std::filesystem::create_directories(out_dir / "cells");
  for (const auto& s : strategies) {
    for (auto seed : seeds) {
      CellOutcome cell;
      cell.strategy = s;
      cell.seed = seed;
      cell.file = "cells/" + s + "_seed" + std::to_string(seed) + ".csv";
      outcome.cells.push_back(cell);
    }
  }
  std::vector<std::string> bodies(outcome.cells.size());
  const int n = static_cast<int>(outcome.cells.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    auto& cell = outcome.cells[i];
    try {
      CellResult r;
      if (kind == "hipi_rl")
        r = run_rl_cell(config, *env, cell.strategy, cell.seed);
      else if (kind == "hipi_bc")
        r = run_bc_cell(config, *env, cell.strategy, cell.seed);
      else
        r = run_verify_cell(config, cell.strategy, cell.seed);
      bodies[i] = std::move(r.rows);
      cell.passed = r.passed;
      write_text_file(out_dir / cell.file, header_line(columns) + bodies[i]);
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  }

  std::string merged = header_line(columns);
  Json cells = Json::array();
  for (std::size_t i = 0; i < outcome.cells.size(); ++i) {
    const auto& cell = outcome.cells[i];
    merged += bodies[i];
    outcome.success = outcome.success && cell.ok && cell.passed;
    Json c = {{"strategy", cell.strategy}, {"seed", cell.seed}, {"file", cell.file}, {"status", cell.ok ? "ok" : "error"}};
    if (!cell.ok) c["error"] = cell.error;
    if (kind == "verify") c["passed"] = cell.passed;
    cells.push_back(c);
  }
  write_text_file(out_dir / "merged.csv", merged);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  outcome.manifest = {{"schema_version", kSchemaVersion},
                      {"kind", kind},
                      {"config_hash", sha256_hex(config.dump())},
                      {"commit", git_commit()},
                      {"wall_time_seconds", wall},
                      {"seeds", seeds},
                      {"strategies", strategies},
                      {"columns", columns},
                      {"cells", cells},
                      {"merged", "merged.csv"},
                      {"failed_cells", std::count_if(outcome.cells.begin(), outcome.cells.end(),
                                                     [](const CellOutcome& c) { return !c.ok; })},
                      {"success", outcome.success},
                      {"config", config}};
  write_json_file(out_dir / "manifest.json", outcome.manifest);
  return outcome;
}

std::string export_summary(const std::string& merged_csv) {
  const auto table = parse_csv(merged_csv);
  const auto c_step = table.column("env_step"), c_strategy = table.column("strategy"), c_seed = table.column("seed"),
             c_ret = table.column("avg_return"), c_succ = table.column("success_rate");
  table.column("task_index");
  // (strategy, env_step) -> seed -> (sum return, sum success, tasks)
  struct Acc {
    double ret = 0.0, succ = 0.0;
    int n = 0;
  };
  std::map<std::pair<std::string, long>, std::map<std::string, Acc>> groups;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    try {
      auto& acc = groups[{row[c_strategy], std::stol(row[c_step])}][row[c_seed]];
      acc.ret += std::stod(row[c_ret]);
      acc.succ += std::stod(row[c_succ]);
      ++acc.n;
    } catch (const std::logic_error&) {
      throw InvalidInput("malformed numeric field in CSV data row " + std::to_string(i + 1));
    }
  }
  CsvWriter out(kSummaryColumns);
  for (const auto& [key, per_seed] : groups) {
    std::vector<double> rets, succs;
    for (const auto& [seed, acc] : per_seed) {
      rets.push_back(acc.ret / acc.n);
      succs.push_back(acc.succ / acc.n);
    }
    auto mean_std = [](const std::vector<double>& v) {
      double m = 0.0;
      for (double x : v) m += x;
      m /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - m) * (x - m);
      return std::pair{m, std::sqrt(var / static_cast<double>(v.size()))};
    };
    const auto [mr, sr] = mean_std(rets);
    const auto [ms, ss] = mean_std(succs);
    out.row({key.first, std::to_string(key.second), std::to_string(rets.size()), format_double(mr), format_double(sr),
             format_double(ms), format_double(ss)});
  }
  return out.str();
}

}  // namespace hipi
