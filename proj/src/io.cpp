#include "hipi/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace hipi {

namespace {

// Collects schema errors with their JSON path instead of stopping at the first one.
class Checker {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& what) { errors.push_back(path + ": " + what); }

  const Json* field(const Json& obj, const std::string& path, const std::string& key) {
    if (!obj.is_object()) {
      fail(path, "expected an object");
      return nullptr;
    }
    const auto it = obj.find(key);
    if (it == obj.end()) {
      fail(join(path, key), "missing");
      return nullptr;
    }
    return &*it;
  }

  std::optional<int> positive_int(const Json& obj, const std::string& path, const std::string& key) {
    const Json* v = field(obj, path, key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer() || v->get<long long>() <= 0) {
      fail(join(path, key), "expected a positive integer");
      return std::nullopt;
    }
    return v->get<int>();
  }

  // Flattens a nested numeric array of the given shape.
  bool numbers(const Json& v, const std::string& path, const std::vector<int>& shape, std::size_t depth,
               std::vector<double>& out) {
    if (depth == shape.size()) {
      if (!v.is_number()) {
        fail(path, "expected a number");
        return false;
      }
      out.push_back(v.get<double>());
      return true;
    }
    if (!v.is_array()) {
      fail(path, "expected an array");
      return false;
    }
    if (static_cast<int>(v.size()) != shape[depth]) {
      fail(path, "expected " + std::to_string(shape[depth]) + " entries, got " + std::to_string(v.size()));
      return false;
    }
    bool ok = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
      ok = numbers(v[i], path + "[" + std::to_string(i) + "]", shape, depth + 1, out) && ok;
    }
    return ok;
  }

  std::optional<std::vector<double>> table(const Json& obj, const std::string& path, const std::string& key,
                                           const std::vector<int>& shape) {
    const Json* v = field(obj, path, key);
    if (!v) return std::nullopt;
    std::vector<double> out;
    if (!numbers(*v, join(path, key), shape, 0, out)) return std::nullopt;
    return out;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
};

struct MdpParts {
  int S = 0, A = 0, T = 0;
  std::vector<double> transition, initial;
};

std::optional<MdpParts> check_mdp(const Json& doc, Checker& c, const std::string& path) {
  const auto S = c.positive_int(doc, path, "num_states");
  const auto A = c.positive_int(doc, path, "num_actions");
  const auto T = c.positive_int(doc, path, "horizon");
  if (!S || !A || !T) return std::nullopt;
  auto P = c.table(doc, path, "transition", {*S, *A, *S});
  auto p1 = c.table(doc, path, "initial", {*S});
  if (!P || !p1) return std::nullopt;
  const auto issues = TabularMdp::violations(*S, *A, *T, *P, *p1);
  for (const auto& issue : issues) c.fail(Checker::join(path, "invariants"), issue);
  if (!issues.empty()) return std::nullopt;
  return MdpParts{*S, *A, *T, std::move(*P), std::move(*p1)};
}

std::optional<std::vector<double>> optional_prior(const Json& doc, Checker& c, const std::string& path, int K) {
  if (!doc.contains("prior")) return std::nullopt;
  return c.table(doc, path, "prior", {K});
}

// Returns the task family or records why it cannot be built.
std::optional<TaskFamily> check_tasks(const Json& doc, const TabularMdp& mdp, Checker& c, const std::string& path,
                                      const std::filesystem::path& base_dir) {
  const Json* kind_field = c.field(doc, path, "kind");
  if (!kind_field) return std::nullopt;
  if (!kind_field->is_string()) {
    c.fail(Checker::join(path, "kind"), "expected a string");
    return std::nullopt;
  }
  const int S = mdp.num_states(), A = mdp.num_actions(), T = mdp.horizon();
  const std::string kind = kind_field->get<std::string>();
  const std::size_t before = c.errors.size();
  try {
    if (kind == "goal") {
      std::optional<std::vector<int>> goals;
      if (doc.contains("goals")) {
        const auto& g = doc["goals"];
        if (!g.is_array()) {
          c.fail(Checker::join(path, "goals"), "expected an array of state indices");
        } else {
          goals.emplace();
          for (std::size_t i = 0; i < g.size(); ++i) {
            if (!g[i].is_number_integer()) {
              c.fail(Checker::join(path, "goals") + "[" + std::to_string(i) + "]", "expected an integer");
            } else {
              goals->push_back(g[i].get<int>());
            }
          }
        }
      }
      double sentinel = kDefaultSentinel;
      if (doc.contains("sentinel")) {
        if (!doc["sentinel"].is_number() || doc["sentinel"].get<double>() >= 0.0)
          c.fail(Checker::join(path, "sentinel"), "expected a negative number");
        else
          sentinel = doc["sentinel"].get<double>();
      }
      const int K = goals ? static_cast<int>(goals->size()) : S;
      auto prior = optional_prior(doc, c, path, K);
      if (c.errors.size() != before) return std::nullopt;
      auto family = make_goal_family(mdp, goals, sentinel);
      if (prior) family = family.with_prior(*prior);
      return family;
    }
    if (kind == "discrete") {
      const bool timed = doc.contains("timed_rewards");
      const std::string key = timed ? "timed_rewards" : "rewards";
      const Json* r = c.field(doc, path, key);
      if (!r) return std::nullopt;
      if (!r->is_array() || r->empty()) {
        c.fail(Checker::join(path, key), "expected a nonempty array");
        return std::nullopt;
      }
      const int K = static_cast<int>(r->size());
      auto values = timed ? c.table(doc, path, key, {K, T, S, A}) : c.table(doc, path, key, {K, S, A});
      auto prior = optional_prior(doc, c, path, K);
      if (!values || c.errors.size() != before) return std::nullopt;
      if (timed) return make_discrete_family_timed(mdp, K, std::move(*values), prior);
      std::vector<StationaryReward> tables(K, StationaryReward(S, std::vector<double>(A)));
      for (int k = 0; k < K; ++k)
        for (int s = 0; s < S; ++s)
          for (int a = 0; a < A; ++a) tables[k][s][a] = (*values)[(static_cast<std::size_t>(k) * S + s) * A + a];
      return make_discrete_family(mdp, tables, prior);
    }
    if (kind == "linear") {
      const Json* coeffs = c.field(doc, path, "coefficients");
      if (!coeffs) return std::nullopt;
      if (!coeffs->is_array() || coeffs->empty() || !(*coeffs)[0].is_array() || (*coeffs)[0].empty()) {
        c.fail(Checker::join(path, "coefficients"), "expected a nonempty array of nonempty vectors");
        return std::nullopt;
      }
      const int K = static_cast<int>(coeffs->size());
      const int d = static_cast<int>((*coeffs)[0].size());
      auto flat = c.table(doc, path, "coefficients", {K, d});
      Json feature_doc;
      std::string feature_path = Checker::join(path, "features");
      if (doc.contains("features_file")) {
        if (!doc["features_file"].is_string()) {
          c.fail(Checker::join(path, "features_file"), "expected a path string");
          return std::nullopt;
        }
        const auto file = base_dir / doc["features_file"].get<std::string>();
        try {
          feature_doc = Json{{"features", read_json_file(file)}};
        } catch (const std::exception& e) {
          c.fail(Checker::join(path, "features_file"), e.what());
          return std::nullopt;
        }
        feature_path = doc["features_file"].get<std::string>();
      } else {
        const Json* f = c.field(doc, path, "features");
        if (!f) return std::nullopt;
        feature_doc = Json{{"features", *f}};
      }
      std::vector<double> phi;
      const bool phi_ok = c.numbers(feature_doc["features"], feature_path, {S, A, d}, 0, phi);
      auto prior = optional_prior(doc, c, path, K);
      if (!flat || !phi_ok || c.errors.size() != before) return std::nullopt;
      std::vector<std::vector<double>> sets(K);
      for (int k = 0; k < K; ++k) sets[k].assign(flat->begin() + k * d, flat->begin() + (k + 1) * d);
      return make_linear_family(mdp, FeatureTable(S, A, d, std::move(phi)), sets, prior);
    }
    c.fail(Checker::join(path, "kind"), "unknown kind '" + kind + "' (goal, discrete, linear)");
  } catch (const InvalidInput& e) {
    c.fail(path, e.what());
  }
  return std::nullopt;
}

[[noreturn]] void throw_errors(const std::vector<std::string>& errors) {
  std::string msg;
  for (const auto& e : errors) msg += (msg.empty() ? "" : "; ") + e;
  throw InvalidInput(msg);
}

Json nested(const std::vector<double>& flat, const std::vector<int>& shape, std::size_t depth, std::size_t& pos) {
  Json out = Json::array();
  for (int i = 0; i < shape[depth]; ++i) {
    if (depth + 1 == shape.size())
      out.push_back(flat[pos++]);
    else
      out.push_back(nested(flat, shape, depth + 1, pos));
  }
  return out;
}

Json nested(const std::vector<double>& flat, const std::vector<int>& shape) {
  std::size_t pos = 0;
  return nested(flat, shape, 0, pos);
}

int int_field(const Json& doc, const char* key, const std::string& where) {
  if (!doc.contains(key) || !doc[key].is_number_integer())
    throw InvalidInput(where + "." + key + ": expected an integer");
  return doc[key].get<int>();
}

}  // namespace

std::vector<std::string> validate_env_json(const Json& doc, const std::filesystem::path& base_dir) {
  Checker c;
  if (!doc.is_object()) return {"(root): expected an object"};
  if (doc.contains("schema_version") && doc["schema_version"] != kFormatVersion)
    c.fail("schema_version", "unsupported version " + doc["schema_version"].dump());
  const Json* m = c.field(doc, "", "mdp");
  const Json* t = c.field(doc, "", "tasks");
  if (!m) return c.errors;
  auto parts = check_mdp(*m, c, "mdp");
  if (!parts || !t) return c.errors;
  const TabularMdp mdp(parts->S, parts->A, parts->T, parts->transition, parts->initial);
  check_tasks(*t, mdp, c, "tasks", base_dir);
  return c.errors;
}

TabularMdp mdp_from_json(const Json& doc) {
  Checker c;
  auto parts = check_mdp(doc, c, "mdp");
  if (!parts) throw_errors(c.errors);
  return TabularMdp(parts->S, parts->A, parts->T, std::move(parts->transition), std::move(parts->initial));
}

Json mdp_to_json(const TabularMdp& mdp) {
  const int S = mdp.num_states(), A = mdp.num_actions();
  return {{"num_states", S},
          {"num_actions", A},
          {"horizon", mdp.horizon()},
          {"transition", nested(mdp.transition_table(), {S, A, S})},
          {"initial", mdp.initial_table()}};
}

TaskFamily tasks_from_json(const Json& doc, const TabularMdp& mdp, const std::filesystem::path& base_dir) {
  Checker c;
  auto family = check_tasks(doc, mdp, c, "tasks", base_dir);
  if (!family) throw_errors(c.errors);
  return std::move(*family);
}

Json tasks_to_json(const TaskFamily& tasks) {
  Json out = {{"kind", to_string(tasks.kind())}, {"prior", tasks.prior_table()}};
  const int K = tasks.num_tasks(), T = tasks.horizon(), S = tasks.num_states(), A = tasks.num_actions();
  switch (tasks.kind()) {
    case TaskKind::kGoal:
      out["goals"] = tasks.goal_states();
      out["sentinel"] = tasks.sentinel();
      break;
    case TaskKind::kLinear: {
      const auto& phi = *tasks.features();
      out["coefficients"] = tasks.coefficients();
      out["features"] = nested(phi.values(), {S, A, phi.dim()});
      break;
    }
    case TaskKind::kDiscrete:
      out["timed_rewards"] = nested(tasks.reward_table(), {K, T, S, A});
      break;
  }
  return out;
}

Environment env_from_json(const Json& doc, const std::filesystem::path& base_dir) {
  const auto errors = validate_env_json(doc, base_dir);
  if (!errors.empty()) throw_errors(errors);
  auto mdp = mdp_from_json(doc["mdp"]);
  auto tasks = tasks_from_json(doc["tasks"], mdp, base_dir);
  return {std::move(mdp), std::move(tasks)};
}

Json env_to_json(const TabularMdp& mdp, const TaskFamily& tasks) {
  return {{"schema_version", kFormatVersion}, {"mdp", mdp_to_json(mdp)}, {"tasks", tasks_to_json(tasks)}};
}

Json trajectory_to_json(const Trajectory& traj) {
  Json steps = Json::array();
  for (const auto& s : traj.steps) steps.push_back({s.state, s.action});
  Json out = {{"steps", steps}};
  if (traj.commanded_task) out["commanded_task"] = *traj.commanded_task;
  return out;
}

Trajectory trajectory_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("steps") || !doc["steps"].is_array())
    throw InvalidInput("trajectory: expected an object with a steps array");
  Trajectory traj;
  for (std::size_t t = 0; t < doc["steps"].size(); ++t) {
    const auto& step = doc["steps"][t];
    if (!step.is_array() || step.size() != 2 || !step[0].is_number_integer() || !step[1].is_number_integer())
      throw InvalidInput("steps[" + std::to_string(t) + "]: expected [state, action]");
    traj.steps.push_back({step[0].get<int>(), step[1].get<int>()});
  }
  if (doc.contains("commanded_task") && !doc["commanded_task"].is_null()) {
    if (!doc["commanded_task"].is_number_integer()) throw InvalidInput("commanded_task: expected an integer");
    traj.commanded_task = doc["commanded_task"].get<int>();
  }
  return traj;
}

Json trajectories_to_json(const std::vector<Trajectory>& trajectories) {
  Json list = Json::array();
  for (const auto& t : trajectories) list.push_back(trajectory_to_json(t));
  return {{"schema_version", kFormatVersion}, {"trajectories", list}};
}

std::vector<Trajectory> trajectories_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("trajectories") || !doc["trajectories"].is_array())
    throw InvalidInput("trajectories: expected an array");
  std::vector<Trajectory> out;
  for (std::size_t i = 0; i < doc["trajectories"].size(); ++i) {
    try {
      out.push_back(trajectory_from_json(doc["trajectories"][i]));
    } catch (const InvalidInput& e) {
      throw InvalidInput("trajectories[" + std::to_string(i) + "]." + e.what());
    }
  }
  return out;
}

Json batch_to_json(const std::vector<BatchItem>& items) {
  Json list = Json::array();
  for (const auto& item : items) {
    if (const auto* tr = std::get_if<Transition>(&item)) {
      list.push_back({{"type", "transition"},
                      {"state", tr->state},
                      {"action", tr->action},
                      {"next_state", tr->next_state},
                      {"commanded_task", tr->commanded_task},
                      {"time_step", tr->time_step}});
    } else {
      Json j = trajectory_to_json(std::get<Trajectory>(item));
      j["type"] = "trajectory";
      list.push_back(j);
    }
  }
  return {{"schema_version", kFormatVersion}, {"items", list}};
}

std::vector<BatchItem> batch_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("items") || !doc["items"].is_array())
    throw InvalidInput("items: expected an array");
  std::vector<BatchItem> out;
  for (std::size_t i = 0; i < doc["items"].size(); ++i) {
    const auto& j = doc["items"][i];
    const std::string where = "items[" + std::to_string(i) + "]";
    const std::string type = j.is_object() ? j.value("type", "") : "";
    if (type == "transition") {
      Transition tr;
      tr.state = int_field(j, "state", where);
      tr.action = int_field(j, "action", where);
      tr.next_state = int_field(j, "next_state", where);
      tr.commanded_task = int_field(j, "commanded_task", where);
      tr.time_step = int_field(j, "time_step", where);
      out.emplace_back(tr);
    } else if (type == "trajectory") {
      try {
        out.emplace_back(trajectory_from_json(j));
      } catch (const InvalidInput& e) {
        throw InvalidInput(where + "." + e.what());
      }
    } else {
      throw InvalidInput(where + ".type: expected \"transition\" or \"trajectory\"");
    }
  }
  return out;
}

Json policy_to_json(const TabularPolicy& policy) {
  return {{"schema_version", kFormatVersion},
          {"num_tasks", policy.num_tasks()},
          {"horizon", policy.horizon()},
          {"num_states", policy.num_states()},
          {"num_actions", policy.num_actions()},
          {"probs", nested(policy.table(), {policy.num_tasks(), policy.horizon(), policy.num_states(),
                                            policy.num_actions()})}};
}

TabularPolicy policy_from_json(const Json& doc) {
  Checker c;
  const auto K = c.positive_int(doc, "", "num_tasks");
  const auto T = c.positive_int(doc, "", "horizon");
  const auto S = c.positive_int(doc, "", "num_states");
  const auto A = c.positive_int(doc, "", "num_actions");
  if (!K || !T || !S || !A) throw_errors(c.errors);
  auto probs = c.table(doc, "", "probs", {*K, *T, *S, *A});
  if (!probs) throw_errors(c.errors);
  TabularPolicy policy(*K, *T, *S, *A, std::move(*probs));
  policy.check();
  return policy;
}

Json solution_to_json(const SoftSolution& sol) {
  return {{"schema_version", kFormatVersion},
          {"num_tasks", sol.num_tasks},
          {"horizon", sol.horizon},
          {"num_states", sol.num_states},
          {"num_actions", sol.num_actions},
          {"sentinel", sol.sentinel},
          {"soft_q", nested(sol.soft_q, {sol.num_tasks, sol.horizon, sol.num_states, sol.num_actions})},
          {"soft_v", nested(sol.soft_v, {sol.num_tasks, sol.horizon + 1, sol.num_states})},
          {"log_z", sol.log_z}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& doc) { write_text_file(path, doc.dump(2) + "\n"); }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << text;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { row(header); }

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw InvalidInput("CSV row width does not match the header");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) text_ += ',';
    text_ += fields[i];
  }
  text_ += '\n';
}

void CsvWriter::save(const std::filesystem::path& path) const { write_text_file(path, text_); }

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw InvalidInput("CSV is missing column '" + name + "'");
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (table.header.empty()) {
      table.header = std::move(fields);
    } else {
      if (fields.size() != table.header.size())
        throw InvalidInput("CSV line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(table.header.size()));
      table.rows.push_back(std::move(fields));
    }
  }
  if (table.header.empty()) throw InvalidInput("CSV is empty");
  return table;
}

}  // namespace hipi
