#pragma once

// Text formats for result matrices and BER reports.
//
// results CSV:  instance_id,group,seed,run_index,algorithm,y
//               one line per cell, y empty for a failed cell
// ber CSV:      group,delta,b,e,r,comparisons,b_count,e_count,r_count
// JSON envelopes carry the same data plus free-form metadata.

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "placebo/ber.hpp"

namespace placebo {

inline constexpr const char* kResultsCsvHeader = "instance_id,group,seed,run_index,algorithm,y";
inline constexpr const char* kBerCsvHeader = "group,delta,b,e,r,comparisons,b_count,e_count,r_count";

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path));
  out << content;
  if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", path));
}

inline std::string results_to_csv(const ResultMatrix& m) {
  std::string out = kResultsCsvHeader;
  out += '\n';
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.runs(); ++j) {
      const auto& y = m.score(i, j);
      out += fmt::format("{},{},{},{},{},{}\n", m.instance_id(i), m.group(i), m.seed(i, j), j,
                         m.algorithm_label(), y ? fmt::format("{}", *y) : std::string{});
    }
  return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

/// Parses a results CSV holding a single algorithm. Every (instance, run)
/// cell must appear exactly once.
inline ResultMatrix results_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || detail::split_csv_line(line) != detail::split_csv_line(kResultsCsvHeader))
    throw std::invalid_argument(fmt::format("results CSV must start with '{}'", kResultsCsvHeader));

  struct Cell {
    std::uint64_t seed;
    std::optional<double> y;
  };
  std::vector<std::string> ids, groups;
  std::map<std::string, std::size_t> row_of;
  std::map<std::pair<std::size_t, std::size_t>, Cell> cells;
  std::string label;
  std::size_t n_runs = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 6) throw std::invalid_argument(fmt::format("line {}: expected 6 fields", line_no));
    if (label.empty()) label = f[4];
    if (f[4] != label)
      throw std::invalid_argument(
          fmt::format("line {}: algorithm '{}' differs from '{}'", line_no, f[4], label));
    auto [it, fresh] = row_of.try_emplace(f[0], ids.size());
    if (fresh) {
      ids.push_back(f[0]);
      groups.push_back(f[1]);
    } else if (groups[it->second] != f[1]) {
      throw std::invalid_argument(fmt::format("line {}: group of '{}' changed", line_no, f[0]));
    }
    std::size_t j = 0;
    std::uint64_t seed = 0;
    try {
      seed = std::stoull(f[2]);
      j = std::stoull(f[3]);
    } catch (const std::exception&) {
      throw std::invalid_argument(fmt::format("line {}: bad seed or run index", line_no));
    }
    Cell c{seed, std::nullopt};
    if (!f[5].empty()) {
      try {
        c.y = std::stod(f[5]);
      } catch (const std::exception&) {
        throw std::invalid_argument(fmt::format("line {}: bad score '{}'", line_no, f[5]));
      }
    }
    if (!cells.emplace(std::make_pair(it->second, j), c).second)
      throw std::invalid_argument(fmt::format("line {}: duplicate cell ({}, {})", line_no, f[0], j));
    n_runs = std::max(n_runs, j + 1);
  }
  if (ids.empty()) throw std::invalid_argument("results CSV holds no cells");
  if (cells.size() != ids.size() * n_runs)
    throw std::invalid_argument(fmt::format("results CSV has {} cells, expected {} x {}", cells.size(),
                                            ids.size(), n_runs));
  ResultMatrix m(label, ids, groups, n_runs);
  for (const auto& [key, c] : cells) {
    m.set_seed(key.first, key.second, c.seed);
    if (c.y) m.set_score(key.first, key.second, *c.y);
  }
  return m;
}

inline nlohmann::json results_to_json(const ResultMatrix& m, const nlohmann::json& metadata = nlohmann::json::object()) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    nlohmann::json seeds = nlohmann::json::array(), ys = nlohmann::json::array();
    for (std::size_t j = 0; j < m.runs(); ++j) {
      seeds.push_back(m.seed(i, j));
      ys.push_back(m.score(i, j) ? nlohmann::json(*m.score(i, j)) : nlohmann::json(nullptr));
    }
    rows.push_back({{"instance_id", m.instance_id(i)}, {"group", m.group(i)}, {"seeds", seeds}, {"y", ys}});
  }
  return {{"format", "placebo-results/1"},
          {"algorithm", m.algorithm_label()},
          {"n_runs", m.runs()},
          {"metadata", metadata},
          {"instances", rows}};
}

inline ResultMatrix results_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "placebo-results/1")
    throw std::invalid_argument("not a placebo-results/1 document");
  std::vector<std::string> ids, groups;
  for (const auto& r : j.at("instances")) {
    ids.push_back(r.at("instance_id").get<std::string>());
    groups.push_back(r.at("group").get<std::string>());
  }
  const auto n = j.at("n_runs").get<std::size_t>();
  ResultMatrix m(j.at("algorithm").get<std::string>(), ids, groups, n);
  std::size_t i = 0;
  for (const auto& r : j.at("instances")) {
    if (r.at("seeds").size() != n || r.at("y").size() != n)
      throw std::invalid_argument(fmt::format("instance '{}' does not have {} runs", ids[i], n));
    for (std::size_t k = 0; k < n; ++k) {
      m.set_seed(i, k, r.at("seeds")[k].get<std::uint64_t>());
      if (!r.at("y")[k].is_null()) m.set_score(i, k, r.at("y")[k].get<double>());
    }
    ++i;
  }
  return m;
}

inline std::string ber_to_csv(const std::vector<BerReport>& reports) {
  std::string out = kBerCsvHeader;
  out += '\n';
  for (const auto& r : reports)
    out += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{},{},{},{}\n", r.group, r.delta, r.b, r.e, r.r,
                       r.comparisons, r.counts.benefit, r.counts.equivalence, r.counts.risk);
  return out;
}

inline nlohmann::json ber_to_json(const BerReport& r) {
  return {{"group", r.group},
          {"delta", r.delta},
          {"b", r.b},
          {"e", r.e},
          {"r", r.r},
          {"comparisons", r.comparisons},
          {"counts",
           {{"benefit", r.counts.benefit},
            {"equivalence", r.counts.equivalence},
            {"risk", r.counts.risk},
            {"strict_equivalence", r.counts.strict_equivalence}}}};
}

/// Table in the layout "n  b*  e*  r*", groups first, then overall.
inline std::string ber_table(const std::vector<BerReport>& reports) {
  std::string out;
  const double delta = reports.empty() ? 0.0 : reports.front().delta;
  out += fmt::format("Empirical BER values for delta={:.4f}\n", delta);
  out += fmt::format("{:<10}{:>8}{:>8}{:>8}\n", "n", "b*", "e*", "r*");
  for (const auto& r : reports) {
    if (r.group == "overall") out += std::string(34, '-') + '\n';
    out += fmt::format("{:<10}{:>8.4f}{:>8.4f}{:>8.4f}\n", r.group, r.b, r.e, r.r);
  }
  return out;
}

}  // namespace placebo
