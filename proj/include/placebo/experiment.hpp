#pragma once

// Paired-seed experiment execution.
//
// Every (instance i, run j) cell gets one seed, s_ij = derive_seed(master,
// digest64(instance), j), and every algorithm consumes that same seed.
// Completed cells are appended to a JSON-lines journal as they finish, so an
// interrupted experiment resumes without recomputing anything.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "placebo/archive.hpp"
#include "placebo/benchmarks.hpp"
#include "placebo/ber.hpp"
#include "placebo/doe.hpp"
#include "placebo/rng.hpp"
#include "placebo/solver.hpp"

namespace placebo {

struct PlannedInstance {
  std::string id;
  std::string group;
  std::string digest;
  std::shared_ptr<const CnfFormula> formula;
};

struct ExperimentPlan {
  std::vector<PlannedInstance> instances;
  std::size_t n_runs = 30;
  std::uint64_t master_seed = 0;
  std::vector<double> deltas{0.0, 0.01, 0.02};
  SolverParams params;
  std::vector<std::string> algorithms{"sa", "placebo"};

  std::uint64_t seed(std::size_t i, std::size_t j) const {
    return derive_seed({master_seed, digest_prefix64(instances[i].digest), j});
  }

  /// Identifies everything that determines cell results.
  std::string fingerprint() const {
    std::string key = fmt::format("runs={};master={};t0={};alpha={};M={};MNI={};algos=", n_runs, master_seed,
                                  params.t0, params.alpha, params.m_steps, params.mni);
    for (const auto& a : algorithms) key += a + ",";
    for (const auto& i : instances) key += ";" + i.digest;
    return sha256_hex(key);
  }

  void validate() const {
    if (instances.empty()) throw std::invalid_argument("plan has no instances");
    if (n_runs < 1) throw std::invalid_argument("n_runs must be at least 1");
    if (algorithms.empty()) throw std::invalid_argument("plan has no algorithms");
    params.validate();
  }
};

/// Builds a plan from the instances of `set` matching `split` (all when empty),
/// keeping at most `per_group` per group in id order.
inline ExperimentPlan make_plan(const BenchmarkSet& set, std::optional<Split> split,
                                std::optional<std::size_t> per_group = std::nullopt) {
  ExperimentPlan plan;
  std::map<std::string, std::size_t> taken;
  for (const auto& inst : set.instances) {
    if (split && inst.split != *split) continue;
    if (per_group && taken[inst.group] >= *per_group) continue;
    ++taken[inst.group];
    plan.instances.push_back({inst.id, inst.group, inst.digest, inst.formula});
  }
  return plan;
}

using SolverFn = std::function<RunOutcome(const CnfFormula&, const SolverParams&)>;

inline std::map<std::string, SolverFn> default_solvers() {
  return {{"sa", [](const CnfFormula& f, const SolverParams& p) { return run_sa_flip(f, p); }},
          {"placebo", [](const CnfFormula& f, const SolverParams& p) { return run_placebo_flip(f, p); }}};
}

struct CellRecord {
  std::string instance_id;
  std::size_t run = 0;
  std::string algorithm;
  std::uint64_t seed = 0;
  bool ok = false;
  double y = 0.0;
  std::size_t flip_calls = 0;
  std::size_t iterations = 0;
  std::int64_t wall_ns = 0;
  std::string error;
};

inline nlohmann::json to_json(const CellRecord& r) {
  nlohmann::json j = {{"instance", r.instance_id}, {"run", r.run},   {"algorithm", r.algorithm},
                      {"seed", r.seed},            {"status", r.ok ? "ok" : "failed"}};
  if (r.ok) {
    j["y"] = r.y;
    j["flip_calls"] = r.flip_calls;
    j["iterations"] = r.iterations;
    j["wall_ns"] = r.wall_ns;
  } else {
    j["error"] = r.error;
  }
  return j;
}

inline CellRecord cell_from_json(const nlohmann::json& j) {
  CellRecord r;
  r.instance_id = j.at("instance").get<std::string>();
  r.run = j.at("run").get<std::size_t>();
  r.algorithm = j.at("algorithm").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.ok = j.at("status").get<std::string>() == "ok";
  if (r.ok) {
    r.y = j.at("y").get<double>();
    r.flip_calls = j.at("flip_calls").get<std::size_t>();
    r.iterations = j.at("iterations").get<std::size_t>();
    r.wall_ns = j.at("wall_ns").get<std::int64_t>();
  } else {
    r.error = j.value("error", "");
  }
  return r;
}

/// Append-only journal. One writer at a time; every line is flushed.
class Journal {
 public:
  static constexpr const char* kFormat = "placebo-journal/1";

  Journal(const std::string& path, const std::string& fingerprint, bool resume) : path_(path) {
    if (resume && std::filesystem::exists(path)) {
      load(fingerprint);
      drop_torn_tail();
      out_.open(path, std::ios::app);
    } else {
      out_.open(path, std::ios::trunc);
      out_ << nlohmann::json{{"format", kFormat}, {"plan", fingerprint}}.dump() << '\n';
      out_.flush();
    }
    if (!out_) throw std::runtime_error(fmt::format("cannot open journal '{}'", path));
  }

  const std::vector<CellRecord>& prior() const { return prior_; }

  void append(const CellRecord& r) {
    std::lock_guard lock(mu_);
    out_ << to_json(r).dump() << '\n';
    out_.flush();
  }

  /// Reads every record of a journal file (header excluded).
  static std::vector<CellRecord> read_records(const std::string& path, std::string* fingerprint = nullptr) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(fmt::format("cannot read journal '{}'", path));
    std::string line;
    std::vector<CellRecord> out;
    bool header = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error&) {
        continue;  // torn final line from an interrupted write
      }
      if (header) {
        if (j.value("format", "") != kFormat) throw std::runtime_error(fmt::format("'{}' is not a journal", path));
        if (fingerprint) *fingerprint = j.value("plan", "");
        header = false;
        continue;
      }
      out.push_back(cell_from_json(j));
    }
    return out;
  }

 private:
  void load(const std::string& fingerprint) {
    std::string existing;
    prior_ = read_records(path_, &existing);
    if (existing != fingerprint)
      throw std::runtime_error(fmt::format("journal '{}' belongs to a different plan; refusing to resume", path_));
  }

  // An interrupted write can leave a partial last line; appending after it
  // would glue the next record onto the fragment.
  void drop_torn_tail() {
    const std::string text = read_file(path_);
    const auto end = text.find_last_of('\n');
    const std::size_t keep = end == std::string::npos ? 0 : end + 1;
    if (keep != text.size()) std::filesystem::resize_file(path_, keep);
  }

  std::string path_;
  std::ofstream out_;
  std::mutex mu_;
  std::vector<CellRecord> prior_;
};

struct ExecuteOptions {
  std::size_t jobs = 1;
  std::optional<std::string> journal_path;
  bool resume = false;
  std::optional<std::size_t> max_new_cells;  // stop early after this many fresh cells
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct ExperimentResult {
  std::map<std::string, ResultMatrix> matrices;
  std::vector<CellRecord> records;  // one per cell that has a result, plan order
  std::vector<CellRecord> failures;
  std::size_t executed = 0;
  std::size_t reused = 0;
  bool complete = false;
};

/// Runs every (instance, run, algorithm) cell of the plan. A solver that
/// throws marks its cell failed; the rest of the experiment continues.
inline ExperimentResult execute(const ExperimentPlan& plan, const std::map<std::string, SolverFn>& solvers,
                                const ExecuteOptions& opt = {}) {
  plan.validate();
  for (const auto& a : plan.algorithms)
    if (!solvers.count(a)) throw std::invalid_argument(fmt::format("no solver registered for '{}'", a));

  const std::size_t l = plan.instances.size(), n = plan.n_runs, na = plan.algorithms.size();
  const std::size_t total = l * n * na;
  auto cell_index = [&](std::size_t i, std::size_t j, std::size_t a) { return (i * n + j) * na + a; };

  std::vector<std::optional<CellRecord>> cells(total);
  std::unique_ptr<Journal> journal;
  ExperimentResult result;

  if (opt.journal_path) {
    journal = std::make_unique<Journal>(*opt.journal_path, plan.fingerprint(), opt.resume);
    std::map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < l; ++i) row_of[plan.instances[i].id] = i;
    for (const auto& r : journal->prior()) {
      const auto it = row_of.find(r.instance_id);
      const auto alg = std::find(plan.algorithms.begin(), plan.algorithms.end(), r.algorithm);
      if (it == row_of.end() || r.run >= n || alg == plan.algorithms.end()) continue;
      if (!r.ok) continue;  // failed cells are retried on resume
      auto& slot = cells[cell_index(it->second, r.run, static_cast<std::size_t>(alg - plan.algorithms.begin()))];
      if (!slot) ++result.reused;
      slot = r;
    }
  }

  std::vector<std::size_t> todo;
  for (std::size_t c = 0; c < total; ++c)
    if (!cells[c]) todo.push_back(c);
  const std::size_t budget = opt.max_new_cells ? std::min(*opt.max_new_cells, todo.size()) : todo.size();

  std::atomic<std::size_t> next{0}, done{0};
  std::mutex progress_mu;
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= budget) return;
      const std::size_t c = todo[k];
      const std::size_t a = c % na, j = (c / na) % n, i = c / na / n;
      CellRecord rec;
      rec.instance_id = plan.instances[i].id;
      rec.run = j;
      rec.algorithm = plan.algorithms[a];
      rec.seed = plan.seed(i, j);
      SolverParams p = plan.params;
      p.seed = rec.seed;
      try {
        const RunOutcome out = solvers.at(rec.algorithm)(*plan.instances[i].formula, p);
        rec.ok = true;
        rec.y = out.best_score;
        rec.flip_calls = out.flip_calls;
        rec.iterations = out.iterations_completed;
        rec.wall_ns = out.wall_time.count();
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
      } catch (...) {
        rec.ok = false;
        rec.error = "unknown failure";
      }
      if (journal) journal->append(rec);
      cells[c] = std::move(rec);
      const std::size_t d = done.fetch_add(1) + 1;
      if (opt.progress) {
        std::lock_guard lock(progress_mu);
        opt.progress(d + result.reused, total);
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(opt.jobs, budget));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  result.executed = budget;

  std::vector<std::string> ids, groups;
  for (const auto& inst : plan.instances) {
    ids.push_back(inst.id);
    groups.push_back(inst.group);
  }
  result.complete = true;
  for (std::size_t a = 0; a < na; ++a) {
    ResultMatrix m(plan.algorithms[a], ids, groups, n);
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        m.set_seed(i, j, plan.seed(i, j));
        const auto& cell = cells[cell_index(i, j, a)];
        if (!cell) {
          result.complete = false;
          continue;
        }
        if (cell->ok) m.set_score(i, j, cell->y);
      }
    result.matrices.emplace(plan.algorithms[a], std::move(m));
  }
  for (const auto& c : cells)
    if (c) {
      result.records.push_back(*c);
      if (!c->ok) result.failures.push_back(*c);
    }
  return result;
}

/// Cells where the algorithms did not all consume one seed. Empty means paired.
inline std::vector<std::string> seed_pairing_violations(const std::vector<CellRecord>& records) {
  std::map<std::pair<std::string, std::size_t>, std::uint64_t> seen;
  std::vector<std::string> bad;
  for (const auto& r : records) {
    auto [it, fresh] = seen.try_emplace({r.instance_id, r.run}, r.seed);
    if (!fresh && it->second != r.seed)
      bad.push_back(fmt::format("{} run {}: {} used seed {}, expected {}", r.instance_id, r.run, r.algorithm, r.seed,
                                it->second));
  }
  return bad;
}

}  // namespace placebo
