// Command-line front end: one subcommand per library entry point.
#include <cmath>
#include <iostream>

#include "CLI11.hpp"
#include "hipi/envs.hpp"
#include "hipi/evaluation.hpp"
#include "hipi/experiment.hpp"
#include "hipi/hipi_bc.hpp"
#include "hipi/hipi_rl.hpp"
#include "hipi/io.hpp"
#include "hipi/relabel.hpp"
#include "hipi/soft_solver.hpp"
#include "hipi/verification.hpp"

using namespace hipi;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  std::string out;

  fs::path out_dir(const std::string& sub) const { return out.empty() ? default_output_root() / sub : fs::path(out); }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--config", c.config, "JSON config file");
  app->add_option("--out", c.out, "Output directory (default: $HIPI_OUT_ROOT/<subcommand>)");
}

Environment load_env(const std::string& path) {
  const fs::path p(path);
  return env_from_json(read_json_file(p), p.parent_path());
}

std::string join_probs(const std::vector<double>& probs) {
  std::string s;
  for (double p : probs) s += "," + format_double(p);
  return s;
}

std::vector<double> one_hot(int K, std::optional<int> k) {
  std::vector<double> v(K, 0.0);
  if (k) v[*k] = 1.0;
  return v;
}

int cmd_solve(const std::string& env_path, bool dump, const Common& c) {
  const auto env = load_env(env_path);
  const auto sol = soft_value_iteration(env.mdp, env.tasks);
  CsvWriter csv({"task_index", "log_z"});
  for (int k = 0; k < sol.num_tasks; ++k) csv.row({std::to_string(k), format_double(sol.log_z[k])});
  const auto dir = c.out_dir("solve");
  csv.save(dir / "log_z.csv");
  if (dump) write_json_file(dir / "solution.json", solution_to_json(sol));
  std::cout << csv.str();
  return 0;
}

int cmd_relabel(const std::string& env_path, const std::string& batch_path, const std::string& strategy_name,
                int window, const Common& c) {
  const auto env = load_env(env_path);
  const auto items = batch_from_json(read_json_file(batch_path));
  const int K = env.tasks.num_tasks();
  const auto strategy = strategy_from_string(strategy_name);
  if (strategy == Strategy::kIrlLearned)
    throw UnsupportedStrategy("irl needs a learner; use irl_exact or irl_batch for stored batches");
  std::vector<std::string> header = {"item_index", "task_sampled"};
  for (int k = 0; k < K; ++k) header.push_back("p_" + std::to_string(k));
  CsvWriter csv(header);
  auto emit = [&](std::size_t i, std::optional<int> task, const std::vector<double>& probs) {
    csv.row([&] {
      std::vector<std::string> f = {std::to_string(i), task ? std::to_string(*task) : ""};
      for (double p : probs) f.push_back(format_double(p));
      return f;
    }());
  };
  if (strategy == Strategy::kIrlBatch) {
    McRelabelOptions options;
    std::optional<SoftSolution> sol;
    if (!items.empty() && std::holds_alternative<Transition>(items.front())) {
      sol = soft_value_iteration(env.mdp, env.tasks);
      options.mode = ScoreMode::kSoftQ;
      options.soft_q = sol->view();
    }
    const auto batch = batch_relabel_mc(items, env.tasks, options, c.seed);
    for (const auto& item : batch.items) emit(item.item_index, item.sampled_task, item.posterior.probs);
  } else {
    std::optional<SoftSolution> sol;
    if (strategy == Strategy::kIrlExact) sol = soft_value_iteration(env.mdp, env.tasks);
    Rng rng(c.seed);
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto* traj = std::get_if<Trajectory>(&items[i]);
      const auto* tr = std::get_if<Transition>(&items[i]);
      if (traj) check_trajectory(env.mdp, *traj);
      if (tr) check_transition(env.mdp, *tr);
      std::optional<int> commanded = traj ? traj->commanded_task : std::optional<int>(tr->commanded_task);
      switch (strategy) {
        case Strategy::kIrlExact: {
          const auto post = traj ? trajectory_posterior(*traj, env.tasks, sol->log_z)
                                 : transition_posterior(*tr, *sol, env.tasks);
          emit(i, static_cast<int>(rng.categorical(post.probs)), post.probs);
          break;
        }
        case Strategy::kFinalState:
        case Strategy::kFutureState: {
          if (!traj) throw InvalidInput("item " + std::to_string(i) + ": hindsight goals need a trajectory item");
          const auto k = strategy == Strategy::kFinalState ? relabel_final_state(*traj, env.tasks)
                                                           : relabel_future_state(*traj, 0, window, env.tasks, rng);
          emit(i, k, one_hot(K, k));
          break;
        }
        case Strategy::kRandom:
          emit(i, relabel_random(env.tasks, rng), env.tasks.prior_table());
          break;
        default:
          emit(i, commanded, one_hot(K, commanded));
      }
    }
  }
  const auto dir = c.out_dir("relabel");
  csv.save(dir / "relabel.csv");
  std::cout << csv.str();
  return 0;
}

int cmd_hipi_rl(const std::string& env_path, const std::string& strategy, long steps, long eval_period,
                const std::string& dataset_path, const Common& c) {
  const auto env = load_env(env_path);
  Json config = c.config.empty() ? Json::object() : read_json_file(c.config);
  if (steps >= 0) config["total_env_steps"] = steps;
  if (eval_period > 0) config["eval_period"] = eval_period;
  auto rl = rl_config_from_json(config.value("hipi_rl", Json::object()), config);
  rl.seed = c.seed;
  std::vector<Trajectory> dataset;
  if (!dataset_path.empty()) dataset = trajectories_from_json(read_json_file(dataset_path));
  const auto result = run_hipi_rl(env.mdp, env.tasks, strategy_from_string(strategy), rl, dataset);
  CsvWriter csv(kCurveColumns);
  for (const auto& r : result.curve) {
    csv.row({std::to_string(r.env_step), strategy, std::to_string(c.seed), std::to_string(r.task),
             format_double(r.avg_return), format_double(r.success_rate)});
  }
  const auto dir = c.out_dir("hipi-rl");
  csv.save(dir / "curve.csv");
  std::cout << "wrote " << (dir / "curve.csv").string() << " (" << result.curve.size() << " rows)\n";
  return 0;
}

int cmd_hipi_bc(const std::string& env_path, const std::string& demos_path, const std::string& mode,
                bool sample_labels, const Common& c) {
  const auto env = load_env(env_path);
  DemonstrationSet demos{trajectories_from_json(read_json_file(demos_path))};
  BcOptions options;
  options.sample_labels = sample_labels;
  const auto result = run_hipi_bc(demos, env.mdp, env.tasks, bc_mode_from_string(mode), c.seed, options);
  const auto eval = evaluate_policy_exact(result.policy, env.mdp, env.tasks);
  CsvWriter csv(kBcColumns);
  for (int k = 0; k < env.tasks.num_tasks(); ++k) {
    csv.row({mode, std::to_string(c.seed), std::to_string(k), format_double(eval.avg_return[k]),
             format_double(eval.success[k])});
  }
  const auto dir = c.out_dir("hipi-bc");
  write_json_file(dir / "policy.json", policy_to_json(result.policy));
  csv.save(dir / "evaluation.csv");
  std::cout << csv.str();
  return 0;
}

int cmd_verify(const std::string& suite, int instances, const Common& c) {
  Json config = {{"kind", "verify"}, {"seeds", {c.seed}}, {"verify", {{"suite", suite}, {"instances", instances}}}};
  const auto dir = c.out_dir("verify");
  const auto outcome = run_experiment(config, dir);
  const auto table = parse_csv(read_text_file(dir / "merged.csv"));
  std::size_t failed = 0;
  for (const auto& row : table.rows) failed += row[table.column("pass")] == "0";
  std::cout << suite << ": " << table.rows.size() - failed << "/" << table.rows.size() << " passed; margins in "
            << (dir / "merged.csv").string() << "\n";
  for (const auto& cell : outcome.cells) {
    if (!cell.ok) std::cerr << "error: " << cell.error << "\n";
  }
  return outcome.success ? 0 : 1;
}

int cmd_run(const Common& c) {
  if (c.config.empty()) throw InvalidInput("run needs --config");
  const fs::path path(c.config);
  auto config = read_json_file(path);
  if (c.seed != 0 && !config.contains("config")) config["seeds"] = Json::array({c.seed});
  const auto dir = c.out_dir("run");
  const auto outcome = run_experiment(config, dir, path.parent_path());
  for (const auto& cell : outcome.cells) {
    std::cout << cell.strategy << " seed " << cell.seed << ": " << (cell.ok ? (cell.passed ? "ok" : "checks failed") : "error: " + cell.error)
              << "\n";
  }
  std::cout << "manifest: " << (dir / "manifest.json").string() << "\n";
  return outcome.success ? 0 : 1;
}

int cmd_summarize(const std::string& merged, const Common& c) {
  const auto summary = export_summary(read_text_file(merged));
  const auto dir = c.out.empty() ? fs::path(merged).parent_path() : fs::path(c.out);
  write_text_file(dir / "summary.csv", summary);
  std::cout << summary;
  return 0;
}

int cmd_validate(const std::string& env_path, const Common& c) {
  std::vector<std::string> errors;
  if (!env_path.empty()) {
    const fs::path p(env_path);
    errors = validate_env_json(read_json_file(p), p.parent_path());
  }
  if (!c.config.empty()) {
    for (const auto& e : validate_config(read_json_file(c.config))) errors.push_back("config " + e);
  }
  if (env_path.empty() && c.config.empty()) throw InvalidInput("validate needs --env or --config");
  for (const auto& e : errors) std::cout << e << "\n";
  if (errors.empty()) std::cout << "valid\n";
  return errors.empty() ? 0 : 1;
}

int cmd_export_env(const std::string& name, int dilation, int horizon, const Common& c) {
  Json env = {{"name", name}};
  if (dilation > 0) env["dilation"] = dilation;
  if (horizon > 0) env["horizon"] = horizon;
  Json tasks = name == "four_rooms" ? Json{{"kind", "goal"}, {"goals", "reachable"}} : Json();
  const auto e = build_environment(env, tasks);
  const auto dir = c.out_dir("envs");
  write_json_file(dir / (name + ".json"), env_to_json(e.mdp, e.tasks));
  if (name == "crossing") {
    const auto cg = make_crossing_gridworld();
    write_json_file(dir / "crossing_demos.json", trajectories_to_json(cg.demos.trajectories));
    std::cout << render_grid(cg.world.layout, {{cg.a, 'A'}, {cg.b, 'B'}, {cg.c, 'C'}, {cg.d, 'D'}});
  } else if (name == "four_rooms") {
    const auto g = make_four_rooms(dilation > 0 ? dilation : 3);
    std::map<int, char> marks;
    for (int s = 0; s < g.layout.num_states(); ++s) {
      if (g.mdp.initial(s) > 0.0) marks[s] = 'S';
    }
    std::cout << render_grid(g.layout, marks);
  }
  std::cout << "wrote " << (dir / (name + ".json")).string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular hindsight relabeling as MaxEnt inverse RL"};
  app.require_subcommand(1);
  Common common;

  std::string env_path, batch_path, strategy = "irl_exact", demos_path, mode = "irl", suite, merged, name;
  bool dump = false, sample_labels = false;
  int window = 4, instances = 100, dilation = 0, horizon = 0;
  long steps = -1, eval_period = 0;
  std::string dataset_path;

  auto* solve = app.add_subcommand("solve", "Soft value iteration; writes log_z.csv");
  add_common(solve, common);
  solve->add_option("--env", env_path, "Environment JSON")->required();
  solve->add_flag("--dump", dump, "Also write solution.json");

  auto* relabel = app.add_subcommand("relabel", "Relabel a stored batch");
  add_common(relabel, common);
  relabel->add_option("--env", env_path, "Environment JSON")->required();
  relabel->add_option("--batch", batch_path, "Batch JSON")->required();
  relabel->add_option("--strategy", strategy, "irl_exact, irl_batch, final_state, future_state, random, none");
  relabel->add_option("--window", window, "future_state look-ahead");

  auto* rl = app.add_subcommand("hipi-rl", "Soft Q-learning with relabeled replay");
  add_common(rl, common);
  rl->add_option("--env", env_path, "Environment JSON")->required();
  rl->add_option("--strategy", strategy, "Relabeling strategy")->required();
  rl->add_option("--steps", steps, "Environment steps (overrides config)");
  rl->add_option("--eval-period", eval_period, "Steps between evaluations (overrides config)");
  rl->add_option("--dataset", dataset_path, "Trajectory JSON pre-filling the buffer");

  auto* bc = app.add_subcommand("hipi-bc", "Behavior cloning with relabeled demonstrations");
  add_common(bc, common);
  bc->add_option("--env", env_path, "Environment JSON")->required();
  bc->add_option("--demos", demos_path, "Trajectory JSON")->required();
  bc->add_option("--mode", mode, "irl, unnormalized, task_agnostic");
  bc->add_flag("--sample-labels", sample_labels, "Sample one label per trajectory");

  auto* verify = app.add_subcommand("verify", "Enumeration checks; nonzero exit on any failure");
  add_common(verify, common);
  verify->add_option("--suite", suite, "relabel_kl, relabel_bound, optimality, duality, bias, her")->required();
  verify->add_option("--instances", instances, "Sweep size");

  auto* run = app.add_subcommand("run", "Run an experiment config (or replay a manifest)");
  add_common(run, common);

  auto* summarize = app.add_subcommand("summarize", "Mean and std across seeds of a merged curve CSV");
  add_common(summarize, common);
  summarize->add_option("--merged", merged, "merged.csv")->required();

  auto* validate = app.add_subcommand("validate", "Report schema and invariant violations");
  add_common(validate, common);
  validate->add_option("--env", env_path, "Environment JSON");

  auto* export_env = app.add_subcommand("export-env", "Write a built-in environment as JSON and draw it");
  add_common(export_env, common);
  export_env->add_option("--name", name, "crossing, four_rooms, two_task_chain")->required();
  export_env->add_option("--dilation", dilation, "four_rooms dilation");
  export_env->add_option("--horizon", horizon, "Horizon override");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*solve) return cmd_solve(env_path, dump, common);
    if (*relabel) return cmd_relabel(env_path, batch_path, strategy, window, common);
    if (*rl) return cmd_hipi_rl(env_path, strategy, steps, eval_period, dataset_path, common);
    if (*bc) return cmd_hipi_bc(env_path, demos_path, mode, sample_labels, common);
    if (*verify) return cmd_verify(suite, instances, common);
    if (*run) return cmd_run(common);
    if (*summarize) return cmd_summarize(merged, common);
    if (*validate) return cmd_validate(env_path, common);
    if (*export_env) return cmd_export_env(name, dilation, horizon, common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
