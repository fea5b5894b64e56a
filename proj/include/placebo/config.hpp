#pragma once

// JSON experiment configuration. Every problem found is reported at once.
//
// {
//   "benchmarks": ["path/or/archive", ...],    required
//   "split": "train-test" | "none",            default "train-test"
//   "train_per_group": 20,
//   "use": "test" | "train" | "all",           default "test"
//   "max_instances_per_group": 5,              optional
//   "params": {"t0", "alpha", "m_steps", "mni"},
//   "n_runs": 30, "master_seed": 0, "jobs": 1,
//   "deltas": [0, 0.01, 0.02],
//   "algorithms": ["sa", "placebo"],
//   "out_dir": "results",
//   "validation": {"require_3cnf": true, "require_phase_transition": true},
//   "tune": {"center_points": 3, "runs_per_point": 2, "budget_limit": 5000,
//            "dead_band": 0, "max_iterations": 200}
// }
//
// Relative paths are resolved against the directory holding the config file.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "placebo/benchmarks.hpp"
#include "placebo/doe.hpp"
#include "placebo/io.hpp"
#include "placebo/solver.hpp"

namespace placebo {

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : std::invalid_argument(join(issues)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid config:";
    for (const auto& i : v) s += "\n  - " + i;
    return s;
  }
  std::vector<std::string> issues_;
};

struct TuneConfig {
  std::size_t center_points = 3;
  std::size_t runs_per_point = 2;
  std::size_t budget_limit = 5000;
  double dead_band = 0.0;
  std::size_t max_iterations = 200;
};

struct ExperimentConfig {
  std::vector<std::string> benchmarks;
  bool split_paper = true;
  std::size_t train_per_group = 20;
  std::string use = "test";
  std::optional<std::size_t> max_instances_per_group;
  SolverParams params;
  bool params_given = false;
  std::size_t n_runs = 30;
  std::uint64_t master_seed = 0;
  std::size_t jobs = 1;
  std::vector<double> deltas{0.0, 0.01, 0.02};
  std::vector<std::string> algorithms{"sa", "placebo"};
  std::string out_dir = "results";
  IngestOptions ingest;
  TuneConfig tune;
};

namespace detail {

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& dst, std::vector<std::string>& issues,
                const std::string& where = "") {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    issues.push_back(fmt::format("'{}{}' has the wrong type", where, key));
  }
}

inline bool is_unsigned(const nlohmann::json& j, const char* key) {
  return !j.contains(key) || j.at(key).is_number_unsigned();
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j, const std::string& base_dir = ".") {
  std::vector<std::string> issues;
  ExperimentConfig c;
  if (!j.is_object()) throw ConfigError({"config must be a JSON object"});

  static const std::vector<std::string> known = {"benchmarks", "split", "train_per_group", "use",
                                                 "max_instances_per_group", "params", "n_runs", "master_seed",
                                                 "jobs", "deltas", "algorithms", "out_dir", "validation", "tune"};
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end()) issues.push_back(fmt::format("unknown key '{}'", k));

  if (!j.contains("benchmarks")) {
    issues.push_back("'benchmarks' is required");
  } else if (j.at("benchmarks").is_string()) {
    c.benchmarks = {j.at("benchmarks").get<std::string>()};
  } else {
    detail::read_field(j, "benchmarks", c.benchmarks, issues);
    if (c.benchmarks.empty()) issues.push_back("'benchmarks' must list at least one source");
  }
  for (auto& b : c.benchmarks)
    if (std::filesystem::path(b).is_relative()) b = (std::filesystem::path(base_dir) / b).lexically_normal().string();

  std::string split = "train-test";
  detail::read_field(j, "split", split, issues);
  if (split != "train-test" && split != "none") issues.push_back(fmt::format("'split' must be train-test or none, got '{}'", split));
  c.split_paper = split == "train-test";

  detail::read_field(j, "use", c.use, issues);
  if (c.use != "test" && c.use != "train" && c.use != "all")
    issues.push_back(fmt::format("'use' must be test, train or all, got '{}'", c.use));
  if (!c.split_paper && c.use != "all") c.use = "all";

  for (const char* k : {"train_per_group", "max_instances_per_group", "n_runs", "master_seed", "jobs"})
    if (!detail::is_unsigned(j, k)) issues.push_back(fmt::format("'{}' must be a non-negative integer", k));
  if (detail::is_unsigned(j, "train_per_group")) detail::read_field(j, "train_per_group", c.train_per_group, issues);
  if (j.contains("max_instances_per_group") && detail::is_unsigned(j, "max_instances_per_group"))
    c.max_instances_per_group = j.at("max_instances_per_group").get<std::size_t>();
  if (detail::is_unsigned(j, "n_runs")) detail::read_field(j, "n_runs", c.n_runs, issues);
  if (detail::is_unsigned(j, "master_seed")) detail::read_field(j, "master_seed", c.master_seed, issues);
  if (detail::is_unsigned(j, "jobs")) detail::read_field(j, "jobs", c.jobs, issues);
  if (c.n_runs < 1) issues.push_back("'n_runs' must be at least 1");
  if (c.jobs < 1) issues.push_back("'jobs' must be at least 1");
  if (c.max_instances_per_group && *c.max_instances_per_group < 1)
    issues.push_back("'max_instances_per_group' must be at least 1");

  if (j.contains("params")) {
    c.params_given = true;
    const auto& p = j.at("params");
    if (!p.is_object()) {
      issues.push_back("'params' must be an object");
    } else {
      for (const auto& [k, v] : p.items())
        if (k != "t0" && k != "alpha" && k != "m_steps" && k != "mni")
          issues.push_back(fmt::format("unknown key 'params.{}'", k));
      detail::read_field(p, "t0", c.params.t0, issues, "params.");
      detail::read_field(p, "alpha", c.params.alpha, issues, "params.");
      for (const char* k : {"m_steps", "mni"})
        if (!detail::is_unsigned(p, k)) issues.push_back(fmt::format("'params.{}' must be a positive integer", k));
      if (detail::is_unsigned(p, "m_steps")) detail::read_field(p, "m_steps", c.params.m_steps, issues, "params.");
      if (detail::is_unsigned(p, "mni")) detail::read_field(p, "mni", c.params.mni, issues, "params.");
      try {
        c.params.validate();
      } catch (const std::invalid_argument& e) {
        issues.push_back(fmt::format("params: {}", e.what()));
      }
    }
  }

  detail::read_field(j, "deltas", c.deltas, issues);
  for (double d : c.deltas)
    if (!(d >= 0.0) || !std::isfinite(d)) issues.push_back(fmt::format("delta {} must be finite and >= 0", d));

  detail::read_field(j, "algorithms", c.algorithms, issues);
  if (c.algorithms.empty()) issues.push_back("'algorithms' must not be empty");
  for (const auto& a : c.algorithms)
    if (a != "sa" && a != "placebo") issues.push_back(fmt::format("unknown algorithm '{}'", a));

  detail::read_field(j, "out_dir", c.out_dir, issues);
  if (std::filesystem::path(c.out_dir).is_relative())
    c.out_dir = (std::filesystem::path(base_dir) / c.out_dir).lexically_normal().string();

  if (j.contains("validation")) {
    const auto& v = j.at("validation");
    detail::read_field(v, "require_3cnf", c.ingest.require_3cnf, issues, "validation.");
    detail::read_field(v, "require_phase_transition", c.ingest.require_phase_transition, issues, "validation.");
  }
  if (j.contains("tune")) {
    const auto& t = j.at("tune");
    detail::read_field(t, "center_points", c.tune.center_points, issues, "tune.");
    detail::read_field(t, "runs_per_point", c.tune.runs_per_point, issues, "tune.");
    detail::read_field(t, "budget_limit", c.tune.budget_limit, issues, "tune.");
    detail::read_field(t, "dead_band", c.tune.dead_band, issues, "tune.");
    detail::read_field(t, "max_iterations", c.tune.max_iterations, issues, "tune.");
    if (c.tune.runs_per_point < 1) issues.push_back("'tune.runs_per_point' must be at least 1");
  }

  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({fmt::format("{}: {}", path, e.what())});
  }
  return parse_config(j, std::filesystem::path(path).parent_path().string().empty()
                             ? std::string(".")
                             : std::filesystem::path(path).parent_path().string());
}

}  // namespace placebo
