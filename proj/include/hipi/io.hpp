#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hipi/hipi_bc.hpp"
#include "hipi/mdp.hpp"
#include "hipi/relabel.hpp"
#include "hipi/soft_solver.hpp"
#include "hipi/task_family.hpp"
#include "json.hpp"

namespace hipi {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

struct Environment {
  TabularMdp mdp;
  TaskFamily tasks;
};

/// Field-path errors ("tasks.rewards[1][0]: expected a number") for an environment
/// document, including every TabularMdp and TaskFamily invariant violation. Empty when valid.
/// `base_dir` resolves a linear family's features_file.
std::vector<std::string> validate_env_json(const Json& doc, const std::filesystem::path& base_dir = {});

TabularMdp mdp_from_json(const Json& doc);
Json mdp_to_json(const TabularMdp& mdp);

TaskFamily tasks_from_json(const Json& doc, const TabularMdp& mdp, const std::filesystem::path& base_dir = {});
Json tasks_to_json(const TaskFamily& tasks);

/// {"schema_version", "mdp", "tasks"}. Throws InvalidInput listing every problem.
Environment env_from_json(const Json& doc, const std::filesystem::path& base_dir = {});
Json env_to_json(const TabularMdp& mdp, const TaskFamily& tasks);

Json trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const Json& doc);
Json trajectories_to_json(const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> trajectories_from_json(const Json& doc);

Json batch_to_json(const std::vector<BatchItem>& items);
std::vector<BatchItem> batch_from_json(const Json& doc);

Json policy_to_json(const TabularPolicy& policy);
TabularPolicy policy_from_json(const Json& doc);

Json solution_to_json(const SoftSolution& sol);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& doc);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// Shortest decimal form that round-trips, so CSVs are byte-stable across runs.
std::string format_double(double x);

/// Comma-separated table with a header row; fields are written verbatim.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<std::string>& fields);
  std::string str() const { return text_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::size_t width_;
  std::string text_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header; throws InvalidInput naming the missing column.
  std::size_t column(const std::string& name) const;
};

/// Plain comma splitting (no quoting). Throws InvalidInput on ragged rows.
CsvTable parse_csv(const std::string& text);

}  // namespace hipi
