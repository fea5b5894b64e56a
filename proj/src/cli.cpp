#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <curl/curl.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "placebo/archive.hpp"
#include "placebo/benchmarks.hpp"
#include "placebo/ber.hpp"
#include "placebo/config.hpp"
#include "placebo/doe.hpp"
#include "placebo/experiment.hpp"
#include "placebo/io.hpp"
#include "placebo/report.hpp"
#include "placebo/solver.hpp"

namespace fs = std::filesystem;

namespace placebo::cli {
namespace {

/// Thrown for bad input the user can fix; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config;
  std::optional<std::size_t> jobs;
  std::optional<std::uint64_t> seed;
  std::string out;
};

std::vector<double> parse_delta_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double d = 0;
    try {
      d = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !(d >= 0.0) || !std::isfinite(d))
      throw UsageError(fmt::format("bad delta '{}'", item));
    out.push_back(d);
  }
  if (out.empty()) throw UsageError("empty delta list");
  return out;
}

std::vector<std::string> parse_name_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

ExperimentConfig load_with_overrides(const Globals& g) {
  if (g.config.empty()) throw UsageError("--config is required");
  if (!fs::exists(g.config)) throw UsageError(fmt::format("config '{}' does not exist", g.config));
  ExperimentConfig c = load_config(g.config);
  if (g.jobs) c.jobs = std::max<std::size_t>(1, *g.jobs);
  if (g.seed) c.master_seed = *g.seed;
  if (!g.out.empty()) c.out_dir = g.out;
  return c;
}

BenchmarkSet load_benchmarks(const ExperimentConfig& c) {
  BenchmarkSet set = ingest_benchmarks(c.benchmarks, c.ingest);
  if (c.split_paper) set = split_paper(std::move(set), c.master_seed, c.train_per_group);
  return set;
}

// ---------------------------------------------------------------------------
// fetch

bool is_url(const std::string& s) { return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0; }

std::size_t write_cb(char* data, std::size_t size, std::size_t n, void* user) {
  return std::fwrite(data, size, n, static_cast<std::FILE*>(user)) * size;
}

/// Downloads `url` to `dest` through a temporary file; nothing is left behind on failure.
void download(const std::string& url, const fs::path& dest) {
  const fs::path part = dest.string() + ".part";
  std::FILE* f = std::fopen(part.c_str(), "wb");
  if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", part.string()));
  CURL* curl = curl_easy_init();
  if (!curl) {
    std::fclose(f);
    fs::remove(part);
    throw std::runtime_error("libcurl initialisation failed");
  }
  char errbuf[CURL_ERROR_SIZE] = {0};
  curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
  curl_easy_setopt(curl, CURLOPT_CONNECTTIMEOUT, 30L);
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, write_cb);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, f);
  curl_easy_setopt(curl, CURLOPT_ERRORBUFFER, errbuf);
  const CURLcode rc = curl_easy_perform(curl);
  curl_easy_cleanup(curl);
  std::fclose(f);
  if (rc != CURLE_OK) {
    fs::remove(part);
    throw UsageError(fmt::format("download of '{}' failed: {}", url, errbuf[0] ? errbuf : curl_easy_strerror(rc)));
  }
  fs::rename(part, dest);
}

int cmd_fetch(const Globals& g, const std::vector<std::string>& sources, const std::string& sha256,
              std::ostream& out, std::ostream& err) {
  const fs::path cache = g.out.empty() ? fs::path("benchmarks") : fs::path(g.out);
  if (!sha256.empty() && sources.size() != 1) throw UsageError("--sha256 needs exactly one source");
  std::vector<std::string> ingest_from;
  std::vector<fs::path> fresh;  // files created by this call, removed if anything fails
  bool changed = false;
  const bool cache_existed = fs::exists(cache);
  try {
    fs::create_directories(cache);
    for (const auto& src : sources) {
      if (is_url(src)) {
        const std::string name = src.substr(src.find_last_of('/') + 1);
        if (name.empty() || name.find('?') != std::string::npos)
          throw UsageError(fmt::format("cannot derive a file name from '{}'", src));
        const fs::path dest = cache / name;
        if (fs::exists(dest)) {
          err << fmt::format("{}: cached\n", name);
        } else {
          err << fmt::format("downloading {}\n", src);
          download(src, dest);
          fresh.push_back(dest);
          changed = true;
        }
        if (!sha256.empty() && sha256_hex(read_file(dest.string())) != sha256)
          throw std::runtime_error(fmt::format("digest mismatch for '{}'", dest.string()));
        ingest_from.push_back(dest.string());
      } else {
        if (!fs::exists(src)) throw UsageError(fmt::format("source '{}' does not exist", src));
        if (fs::is_regular_file(src) && looks_like_archive(src)) {
          const fs::path dest = cache / fs::path(src).filename();
          const std::string data = read_file(src);
          if (!sha256.empty() && sha256_hex(data) != sha256)
            throw std::runtime_error(fmt::format("digest mismatch for '{}'", src));
          if (!fs::exists(dest) || sha256_hex(read_file(dest.string())) != sha256_hex(data)) {
            const bool existed = fs::exists(dest);
            write_file(dest.string(), data);
            if (!existed) fresh.push_back(dest);
            changed = true;
          }
          ingest_from.push_back(dest.string());
        } else {
          ingest_from.push_back(src);
        }
      }
    }
    IngestOptions opt;
    BenchmarkSet set = ingest_benchmarks(ingest_from, opt);
    bool splittable = true;
    for (const auto& grp : set.groups()) splittable = splittable && set.count(grp) >= 20;
    if (splittable) set = split_paper(std::move(set), g.seed.value_or(0));
    else err << "fewer than 20 instances in some group; manifest written without a split\n";
    const std::string text = manifest_json(set).dump(2) + "\n";
    const fs::path manifest = cache / "manifest.json";
    if (fs::exists(manifest) && read_file(manifest.string()) == text && !changed) {
      err << "up to date\n";
    } else {
      write_file(manifest.string(), text);
      err << fmt::format("{} instances in {} groups\n", set.instances.size(), set.groups().size());
    }
    out << manifest.string() << "\n";
    return kOk;
  } catch (...) {
    for (const auto& p : fresh) fs::remove(p);
    std::error_code ec;
    if (!cache_existed && fs::is_empty(cache, ec)) fs::remove(cache, ec);
    throw;
  }
}

// ---------------------------------------------------------------------------
// run

int cmd_run(const Globals& g, bool resume, const std::string& algorithms, std::optional<std::size_t> max_cells,
            std::ostream& out, std::ostream& err) {
  ExperimentConfig c = load_with_overrides(g);
  if (!algorithms.empty()) {
    c.algorithms = parse_name_list(algorithms);
    for (const auto& a : c.algorithms)
      if (a != "sa" && a != "placebo") throw UsageError(fmt::format("unknown algorithm '{}'", a));
    if (c.algorithms.empty()) throw UsageError("--algorithms is empty");
  }
  const BenchmarkSet set = load_benchmarks(c);
  std::optional<Split> use;
  if (c.use == "train") use = Split::Train;
  if (c.use == "test") use = Split::Test;
  ExperimentPlan plan = make_plan(set, use, c.max_instances_per_group);
  if (plan.instances.empty()) throw UsageError(fmt::format("no instances selected (use = {})", c.use));
  plan.n_runs = c.n_runs;
  plan.master_seed = c.master_seed;
  plan.deltas = c.deltas;
  plan.params = c.params;
  plan.algorithms = c.algorithms;

  fs::create_directories(c.out_dir);
  const fs::path dir(c.out_dir);
  write_file((dir / "manifest.json").string(), manifest_json(set).dump(2) + "\n");

  ExecuteOptions opt;
  opt.jobs = c.jobs;
  opt.journal_path = (dir / "journal.jsonl").string();
  opt.resume = resume;
  opt.max_new_cells = max_cells;
  std::size_t last_pct = 101;
  opt.progress = [&](std::size_t done, std::size_t total) {
    const std::size_t pct = done * 100 / total;
    if (pct / 10 != last_pct / 10 || done == total) {
      err << fmt::format("[run] {}/{} cells\n", done, total);
      last_pct = pct;
    }
  };
  err << fmt::format("[run] {} instances x {} runs x {} algorithms\n", plan.instances.size(), plan.n_runs,
                     plan.algorithms.size());
  const ExperimentResult res = execute(plan, default_solvers(), opt);
  err << fmt::format("[run] executed {} cells, reused {} from the journal\n", res.executed, res.reused);
  if (!res.complete) {
    err << "[run] experiment incomplete; rerun with --resume to finish\n";
    return kRuntimeFailure;
  }

  nlohmann::json files = nlohmann::json::object();
  for (const auto& [label, m] : res.matrices) {
    const fs::path p = dir / fmt::format("results_{}.csv", label);
    write_file(p.string(), results_to_csv(m));
    files[label] = p.string();
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : res.failures) {
    failures.push_back(to_json(f));
    err << fmt::format("[run] FAILED {} run {} ({}): {}\n", f.instance_id, f.run, f.algorithm, f.error);
  }
  if (!res.failures.empty())
    err << fmt::format("[run] warning: {} failed cells are excluded from BER\n", res.failures.size());
  const auto pairing = seed_pairing_violations(Journal::read_records(*opt.journal_path));
  nlohmann::json summary = {{"format", "placebo-run/1"},
                            {"plan", plan.fingerprint()},
                            {"instances", plan.instances.size()},
                            {"n_runs", plan.n_runs},
                            {"master_seed", plan.master_seed},
                            {"params", to_json(plan.params)},
                            {"results", files},
                            {"journal", *opt.journal_path},
                            {"failures", failures},
                            {"seed_pairing_ok", pairing.empty()}};
  const fs::path sp = dir / "run.json";
  write_file(sp.string(), summary.dump(2) + "\n");
  out << sp.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// ber / report

std::pair<ResultMatrix, ResultMatrix> load_pair(const std::string& a, const std::string& b) {
  for (const auto& p : {a, b})
    if (!fs::exists(p)) throw UsageError(fmt::format("results file '{}' does not exist", p));
  ResultMatrix ym = results_from_csv(read_file(a));
  ResultMatrix y0 = results_from_csv(read_file(b));
  check_paired(ym, y0);
  return {std::move(ym), std::move(y0)};
}

int cmd_ber(const Globals& g, const std::vector<std::string>& files, const std::string& deltas_text, std::ostream& out,
            std::ostream& err) {
  const auto deltas = parse_delta_list(deltas_text);
  const auto [ym, y0] = load_pair(files.at(0), files.at(1));
  const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
  fs::create_directories(dir);
  for (double d : deltas) {
    const auto reports = ber_grouped(ym, y0, d);
    const fs::path p = dir / fmt::format("ber_{}.csv", delta_tag(d));
    write_file(p.string(), ber_to_csv(reports));
    err << ber_table(reports) << "\n";
    out << p.string() << "\n";
  }
  const std::size_t failed = ym.failed_cells() + y0.failed_cells();
  if (failed) err << fmt::format("warning: {} failed cells dropped pairwise\n", failed);
  return kOk;
}

int cmd_report(const Globals& g, const std::vector<std::string>& files, const std::string& deltas_text,
               std::ostream& out, std::ostream& err) {
  const auto deltas = parse_delta_list(deltas_text);
  const auto [ym, y0] = load_pair(files.at(0), files.at(1));
  const std::string dir = g.out.empty() ? std::string("report") : g.out;
  const auto written = write_report(ym, y0, deltas, dir);
  err << fmt::format("wrote {} files to {}\n", written.size(), dir);
  out << written.front() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// tune

/// Mean best Y of SA[Flip] over the training instances. Seeds depend on the
/// candidate's seed, the instance and the run, never on the candidate's
/// other parameters.
double evaluate_on(const std::vector<PlannedInstance>& train, std::size_t runs, const SolverParams& p) {
  double sum = 0.0;
  for (const auto& inst : train)
    for (std::size_t j = 0; j < runs; ++j) {
      SolverParams q = p;
      q.seed = derive_seed({p.seed, digest_prefix64(inst.digest), j});
      sum += run_sa_flip(*inst.formula, q).best_score;
    }
  return sum / static_cast<double>(train.size() * runs);
}

std::string effects_table(const EffectReport& e) {
  std::string s = fmt::format("{:<10}{:>14}\n", "effect", "value");
  for (std::size_t f = 0; f < kFactorCount; ++f) s += fmt::format("{:<10}{:>14.6g}\n", kFactorNames[f], e.main_effects[f]);
  for (const auto& i : e.interactions)
    s += fmt::format("{:<10}{:>14.6g}\n", fmt::format("{}x{}", kFactorNames[i.first], kFactorNames[i.second]), i.value);
  return s;
}

int cmd_tune(const Globals& g, const std::string& phase, std::ostream& out, std::ostream& err) {
  if (phase != "screen" && phase != "rsm") throw UsageError("--phase must be screen or rsm");
  ExperimentConfig c = load_with_overrides(g);
  if (!c.split_paper) throw UsageError("tuning needs a training split; set \"split\": \"train-test\"");
  BenchmarkSet set = ingest_benchmarks(c.benchmarks, c.ingest);
  try {
    set = split_paper(std::move(set), c.master_seed, c.train_per_group);
  } catch (const std::invalid_argument& e) {
    throw UsageError(fmt::format("no training split: {}", e.what()));
  }
  const ExperimentPlan train = make_plan(set, Split::Train, c.max_instances_per_group);
  if (train.instances.empty()) throw UsageError("training split is empty");
  const auto& insts = train.instances;
  const std::size_t runs = c.tune.runs_per_point;
  std::size_t evals = 0;
  const Evaluator evaluator = [&](const SolverParams& p) {
    const double y = evaluate_on(insts, runs, p);
    err << fmt::format("[tune] point {}: T0={:.4g} alpha={:.4g} M={} MNI={} -> {:.6g}\n", ++evals, p.t0, p.alpha,
                       p.m_steps, p.mni, y);
    return y;
  };
  fs::create_directories(c.out_dir);
  const fs::path dir(c.out_dir);

  if (phase == "screen") {
    const auto factors = default_factors();
    const ScreeningResult r = run_screening(factors, c.tune.center_points, c.master_seed, evaluator);
    std::string journal;
    for (std::size_t k = 0; k < r.design.decoded.size(); ++k)
      journal += nlohmann::json{{"row", k},
                                {"coded", r.design.coded[k]},
                                {"params", to_json(r.design.decoded[k])},
                                {"response", r.responses[k]}}
                     .dump() +
                 "\n";
    write_file((dir / "screen_design.jsonl").string(), journal);
    const fs::path p = dir / "screen_effects.json";
    write_file(p.string(), nlohmann::json{{"design", r.design.design_name},
                                          {"rows", r.design.decoded.size()},
                                          {"effects", to_json(r.effects)}}
                                   .dump(2) +
                               "\n");
    err << effects_table(r.effects);
    out << p.string() << "\n";
    return kOk;
  }

  SolverParams start = c.params;
  if (!c.params_given) {
    const auto f = default_factors();
    start = detail::params_from({f[kT0].medium, f[kAlpha].medium, f[kM].medium, f[kMni].medium});
  }
  RsmOptions opt;
  opt.budget_limit = c.tune.budget_limit;
  opt.dead_band = c.tune.dead_band;
  opt.max_iterations = c.tune.max_iterations;
  opt.master_seed = c.master_seed;
  const RsmResult r = rsm_walk(start, default_half_distances(), opt, evaluator);
  write_file((dir / "rsm_trace.json").string(), to_json(r).dump(2) + "\n");
  nlohmann::json params = to_json(r.final_params);
  params.erase("seed");
  const fs::path p = dir / "tuned_params.json";
  write_file(p.string(), nlohmann::json{{"params", params}, {"stop_reason", r.stop_reason}}.dump(2) + "\n");
  err << fmt::format("[tune] stopped ({}) after {} iterations at T0={:.4g} alpha={:.4g} M={} MNI={}\n",
                     r.stop_reason, r.trace.size(), r.final_params.t0, r.final_params.alpha, r.final_params.m_steps,
                     r.final_params.mni);
  out << p.string() << "\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Paired SA[Flip] / placebo experiments on 3-SAT with BER statistics", "placebo"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  std::size_t jobs = 0;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "experiment config (JSON)");
  auto* jobs_opt = app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides config)");
  app.add_option("--out", g.out, "output directory");

  auto* fetch = app.add_subcommand("fetch", "download or collect benchmarks and write a manifest");
  std::vector<std::string> sources;
  std::string sha256;
  fetch->add_option("sources", sources, "URLs, archives or directories")->required();
  fetch->add_option("--sha256", sha256, "expected digest of a single source archive");

  auto* run_cmd = app.add_subcommand("run", "execute the paired experiment from a config");
  bool resume = false;
  std::string algorithms;
  std::size_t max_cells = 0;
  run_cmd->add_flag("--resume", resume, "continue from the journal in the output directory");
  run_cmd->add_option("--algorithms", algorithms, "comma-separated subset of sa,placebo");
  auto* max_cells_opt = run_cmd->add_option("--max-cells", max_cells, "stop after this many new cells");

  auto* ber = app.add_subcommand("ber", "BER tables for two paired result files");
  std::vector<std::string> ber_files;
  std::string ber_deltas = "0";
  ber->add_option("results", ber_files, "metaheuristic CSV, then placebo CSV")->required()->expected(2);
  ber->add_option("--delta", ber_deltas, "comma-separated delta list");

  auto* tune = app.add_subcommand("tune", "screen or walk the parameter space on the training split");
  std::string phase;
  tune->add_option("--phase", phase, "screen or rsm")->required();

  auto* report = app.add_subcommand("report", "summary tables and plots for two paired result files");
  std::vector<std::string> report_files;
  std::string report_deltas = "0,0.01,0.02";
  report->add_option("results", report_files, "metaheuristic CSV, then placebo CSV")->required()->expected(2);
  report->add_option("--delta", report_deltas, "comma-separated delta list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int rc = app.exit(e, o, e2);
    err << o.str() << e2.str();
    return rc == 0 ? kOk : kUsageError;
  }
  if (*jobs_opt) g.jobs = jobs;
  if (*seed_opt) g.seed = seed;

  try {
    if (*fetch) return cmd_fetch(g, sources, sha256, out, err);
    if (*run_cmd)
      return cmd_run(g, resume, algorithms, *max_cells_opt ? std::optional<std::size_t>(max_cells) : std::nullopt,
                     out, err);
    if (*ber) return cmd_ber(g, ber_files, ber_deltas, out, err);
    if (*tune) return cmd_tune(g, phase, out, err);
    if (*report) return cmd_report(g, report_files, report_deltas, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const PairingError& e) {
    err << "error: inputs are not paired: " << e.what() << "\n";
    return kUsageError;
  } catch (const IngestError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kUsageError;
}

}  // namespace placebo::cli
