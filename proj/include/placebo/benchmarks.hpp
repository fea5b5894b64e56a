#pragma once

// Benchmark ingestion: DIMACS files from directories and tar archives,
// grouped by variable count, with a manifest and a seeded train/test split.

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "placebo/archive.hpp"
#include "placebo/cnf.hpp"
#include "placebo/io.hpp"
#include "placebo/rng.hpp"

namespace placebo {

enum class Split { Unassigned, Train, Test };

inline std::string split_label(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Test: return "test";
    default: return "unassigned";
  }
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  if (s == "unassigned") return Split::Unassigned;
  throw std::invalid_argument(fmt::format("unknown split label '{}'", s));
}

struct BenchmarkInstance {
  std::string id;      // file name without directories
  std::string origin;  // path, or archive path + "!" + member
  std::string digest;  // SHA-256 of the file bytes
  std::string group;   // variable count as text
  std::shared_ptr<const CnfFormula> formula;
  Split split = Split::Unassigned;
};

struct BenchmarkSet {
  std::vector<BenchmarkInstance> instances;

  std::vector<std::string> groups() const {
    std::vector<std::string> g;
    for (const auto& i : instances) g.push_back(i.group);
    std::sort(g.begin(), g.end(), detail::group_less);
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
  }

  std::size_t count(const std::string& group, std::optional<Split> split = std::nullopt) const {
    return static_cast<std::size_t>(std::count_if(instances.begin(), instances.end(), [&](const auto& i) {
      return i.group == group && (!split || i.split == *split);
    }));
  }

  bool has_split(Split s) const {
    return std::any_of(instances.begin(), instances.end(), [s](const auto& i) { return i.split == s; });
  }
};

struct IngestOptions {
  bool require_3cnf = true;
  bool require_phase_transition = true;
  double min_ratio = 4.0;  // clause/variable ratio window
  double max_ratio = 4.5;
};

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct RawFile {
  std::string id;
  std::string origin;
  std::string content;
};

inline bool is_cnf_name(const std::string& name) { return has_suffix(name, ".cnf"); }

inline std::string base_name(const std::string& path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

inline void collect_archive(const std::string& path, std::vector<RawFile>& out) {
  const std::string data = read_file(path);
  std::vector<ArchiveEntry> entries;
  try {
    entries = read_archive(data);
  } catch (const std::exception& e) {
    throw IngestError(fmt::format("{}: {}", path, e.what()));
  }
  for (auto& e : entries)
    if (is_cnf_name(e.name)) out.push_back({base_name(e.name), path + "!" + e.name, std::move(e.content)});
}

inline void collect(const std::filesystem::path& source, std::vector<RawFile>& out) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const auto status = fs::status(source, ec);
  if (ec || !fs::exists(status)) throw IngestError(fmt::format("cannot read source '{}'", source.string()));
  if (fs::is_directory(status)) {
    std::vector<fs::path> files;
    for (auto it = fs::recursive_directory_iterator(source, ec); !ec && it != fs::recursive_directory_iterator();
         it.increment(ec))
      if (it->is_regular_file()) files.push_back(it->path());
    if (ec) throw IngestError(fmt::format("cannot list '{}': {}", source.string(), ec.message()));
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const auto s = f.string();
      if (is_cnf_name(s))
        out.push_back({f.filename().string(), s, read_file(s)});
      else if (looks_like_archive(s))
        collect_archive(s, out);
    }
    return;
  }
  const auto s = source.string();
  if (looks_like_archive(s))
    collect_archive(s, out);
  else
    out.push_back({source.filename().string(), s, read_file(s)});
}

}  // namespace detail

/// Parses and validates every .cnf reachable from `sources` (files,
/// directories scanned recursively, tar/tar.gz archives). Identical
/// contents are kept once; different contents under one file name are an
/// error. Instances come back sorted by id.
inline BenchmarkSet ingest_benchmarks(const std::vector<std::string>& sources, const IngestOptions& opt = {}) {
  std::vector<detail::RawFile> raw;
  for (const auto& s : sources) detail::collect(s, raw);
  if (raw.empty()) throw IngestError("no .cnf files found in the given sources");

  BenchmarkSet set;
  std::set<std::string> digests;
  std::map<std::string, std::string> digest_of_id;
  for (auto& f : raw) {
    const std::string digest = sha256_hex(f.content);
    if (!digests.insert(digest).second) continue;
    if (auto [it, fresh] = digest_of_id.try_emplace(f.id, digest); !fresh)
      throw IngestError(fmt::format("duplicate instance id '{}' with different content ({})", f.id, f.origin));
    std::shared_ptr<const CnfFormula> formula;
    try {
      formula = std::make_shared<const CnfFormula>(parse_dimacs(f.content, f.id));
    } catch (const ParseError& e) {
      throw IngestError(fmt::format("{}: {}", f.origin, e.what()));
    }
    if (opt.require_3cnf && formula->uniform_width() != 3)
      throw IngestError(fmt::format("{}: not a 3-CNF formula", f.origin));
    const double ratio = static_cast<double>(formula->num_clauses()) / static_cast<double>(formula->num_vars());
    if (opt.require_phase_transition && (ratio < opt.min_ratio || ratio > opt.max_ratio))
      throw IngestError(fmt::format("{}: clause/variable ratio {:.3f} outside [{}, {}]", f.origin, ratio,
                                    opt.min_ratio, opt.max_ratio));
    set.instances.push_back({f.id, f.origin, digest, std::to_string(formula->num_vars()), formula});
  }
  std::sort(set.instances.begin(), set.instances.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  return set;
}

/// Seeded shuffle inside each group; the first `train_per_group` become
/// train, the rest test.
inline BenchmarkSet split_paper(BenchmarkSet set, std::uint64_t master_seed, std::size_t train_per_group = 20) {
  for (const auto& g : set.groups()) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < set.instances.size(); ++i)
      if (set.instances[i].group == g) idx.push_back(i);
    if (idx.size() < train_per_group)
      throw std::invalid_argument(fmt::format("group n={} has {} instances, the split needs at least {}", g,
                                              idx.size(), train_per_group));
    Rng rng(derive_seed({master_seed, fnv1a64(g)}));
    for (std::size_t i = idx.size(); i-- > 1;) std::swap(idx[i], idx[rng.below(i + 1)]);
    for (std::size_t k = 0; k < idx.size(); ++k)
      set.instances[idx[k]].split = k < train_per_group ? Split::Train : Split::Test;
  }
  return set;
}

inline nlohmann::json manifest_json(const BenchmarkSet& set) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& i : set.instances)
    rows.push_back({{"id", i.id},
                    {"origin", i.origin},
                    {"n", i.formula->num_vars()},
                    {"m", i.formula->num_clauses()},
                    {"digest", i.digest},
                    {"group", i.group},
                    {"split", split_label(i.split)}});
  nlohmann::json groups = nlohmann::json::object();
  for (const auto& g : set.groups()) groups[g] = set.count(g);
  return {{"format", "placebo-manifest/1"}, {"groups", groups}, {"instances", rows}};
}

/// Copies split labels from a manifest onto a freshly ingested set (matched by digest).
inline void apply_manifest_splits(BenchmarkSet& set, const nlohmann::json& manifest) {
  std::map<std::string, Split> by_digest;
  for (const auto& r : manifest.at("instances")) by_digest[r.at("digest")] = parse_split(r.at("split"));
  for (auto& i : set.instances)
    if (auto it = by_digest.find(i.digest); it != by_digest.end()) i.split = it->second;
}

}  // namespace placebo
