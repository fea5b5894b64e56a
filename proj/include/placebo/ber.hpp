#pragma once

// Benefit / equivalence / risk statistics over paired result matrices.
//
// For an instance i with runs j, k of the two algorithms, a comparison is a
// benefit when ym[i][j] < y0[i][k] - delta, a risk when ym[i][j] > y0[i][k]
// + delta, and an equivalence otherwise. Pairs sitting exactly on the band
// edge therefore count as equivalent. Everything is counted in integers;
// the fractions are divided out once, at the end.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace placebo {

class PairingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// l x n matrix of scores for one algorithm. A missing score marks a failed cell.
class ResultMatrix {
 public:
  ResultMatrix() = default;
  ResultMatrix(std::string algorithm_label, std::vector<std::string> instance_ids,
               std::vector<std::string> groups, std::size_t n_runs)
      : label_(std::move(algorithm_label)),
        ids_(std::move(instance_ids)),
        groups_(std::move(groups)),
        n_runs_(n_runs),
        seeds_(ids_.size() * n_runs, 0),
        scores_(ids_.size() * n_runs) {
    if (ids_.empty()) throw std::invalid_argument("result matrix needs at least one instance");
    if (n_runs_ == 0) throw std::invalid_argument("result matrix needs at least one run");
    if (groups_.size() != ids_.size())
      throw std::invalid_argument("one group label per instance is required");
  }

  const std::string& algorithm_label() const { return label_; }
  std::size_t rows() const { return ids_.size(); }
  std::size_t runs() const { return n_runs_; }
  const std::vector<std::string>& instance_ids() const { return ids_; }
  const std::vector<std::string>& groups() const { return groups_; }
  const std::string& instance_id(std::size_t i) const { return ids_[i]; }
  const std::string& group(std::size_t i) const { return groups_[i]; }

  std::uint64_t seed(std::size_t i, std::size_t j) const { return seeds_[i * n_runs_ + j]; }
  const std::optional<double>& score(std::size_t i, std::size_t j) const {
    return scores_[i * n_runs_ + j];
  }

  void set_seed(std::size_t i, std::size_t j, std::uint64_t s) { seeds_.at(i * n_runs_ + j) = s; }

  void set_score(std::size_t i, std::size_t j, double y) {
    if (!(y >= 0.0 && y <= 1.0))
      throw std::invalid_argument(fmt::format("score {} outside [0,1] at ({}, {})", y, i, j));
    scores_.at(i * n_runs_ + j) = y;
  }

  void mark_failed(std::size_t i, std::size_t j) { scores_.at(i * n_runs_ + j).reset(); }

  std::size_t failed_cells() const {
    return static_cast<std::size_t>(
        std::count_if(scores_.begin(), scores_.end(), [](const auto& s) { return !s.has_value(); }));
  }

 private:
  std::string label_;
  std::vector<std::string> ids_;
  std::vector<std::string> groups_;
  std::size_t n_runs_ = 0;
  std::vector<std::uint64_t> seeds_;
  std::vector<std::optional<double>> scores_;
};

/// Throws PairingError unless both matrices cover the same instances, in the
/// same order, with the same run count and the same seed in every cell.
inline void check_paired(const ResultMatrix& a, const ResultMatrix& b) {
  if (a.rows() != b.rows() || a.runs() != b.runs())
    throw PairingError(fmt::format("shape mismatch: {}x{} vs {}x{}", a.rows(), a.runs(), b.rows(),
                                   b.runs()));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (a.instance_id(i) != b.instance_id(i))
      throw PairingError(fmt::format("row {}: instance '{}' vs '{}'", i, a.instance_id(i),
                                     b.instance_id(i)));
    if (a.group(i) != b.group(i))
      throw PairingError(fmt::format("row {}: group '{}' vs '{}'", i, a.group(i), b.group(i)));
    for (std::size_t j = 0; j < a.runs(); ++j)
      if (a.seed(i, j) != b.seed(i, j))
        throw PairingError(fmt::format("cell ({}, {}) of '{}': seed {} vs {}", i, j,
                                       a.instance_id(i), a.seed(i, j), b.seed(i, j)));
  }
}

struct BerCounts {
  std::uint64_t benefit = 0;
  std::uint64_t equivalence = 0;  // complement: total - benefit - risk
  std::uint64_t risk = 0;
  std::uint64_t strict_equivalence = 0;  // both band inequalities strict
  std::uint64_t total = 0;

  BerCounts& operator+=(const BerCounts& o) {
    benefit += o.benefit;
    equivalence += o.equivalence;
    risk += o.risk;
    strict_equivalence += o.strict_equivalence;
    total += o.total;
    return *this;
  }
  friend bool operator==(const BerCounts&, const BerCounts&) = default;
};

struct BerReport {
  std::string group;
  double delta = 0.0;
  double b = 0.0;
  double e = 0.0;
  double r = 0.0;
  std::uint64_t comparisons = 0;
  BerCounts counts;

  /// Pairs exactly on a band edge: counted as equivalent here, by neither
  /// strict inequality of the double-sided definition.
  std::uint64_t boundary_ties() const { return counts.equivalence - counts.strict_equivalence; }
};

inline BerReport make_report(std::string group, double delta, const BerCounts& c) {
  BerReport rep;
  rep.group = std::move(group);
  rep.delta = delta;
  rep.counts = c;
  rep.comparisons = c.total;
  if (c.total > 0) {
    const double t = static_cast<double>(c.total);
    rep.b = static_cast<double>(c.benefit) / t;
    rep.r = static_cast<double>(c.risk) / t;
    rep.e = static_cast<double>(c.equivalence) / t;
  }
  return rep;
}

namespace detail {

inline void check_delta(double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta))
    throw std::invalid_argument(fmt::format("delta must be a finite non-negative number, got {}", delta));
}

/// Classifies one pair on the difference x - y. Negating a difference is
/// exact, so swapping the arguments swaps benefit and risk bit for bit.
inline void classify(double x, double y, double delta, BerCounts& c) {
  const double d = x - y;
  c.benefit += d < -delta;
  c.risk += d > delta;
  c.strict_equivalence += -delta < d && d < delta;
}

/// Counts one instance row. Cells failed in either matrix drop out of both.
inline BerCounts count_row(const ResultMatrix& ym, const ResultMatrix& y0, std::size_t i,
                           double delta) {
  std::vector<double> a, b;
  for (std::size_t j = 0; j < ym.runs(); ++j) {
    if (!ym.score(i, j) || !y0.score(i, j)) continue;
    a.push_back(*ym.score(i, j));
    b.push_back(*y0.score(i, j));
  }
  BerCounts c;
  for (const double x : a)
    for (const double y : b) classify(x, y, delta, c);
  c.total = static_cast<std::uint64_t>(a.size()) * b.size();
  c.equivalence = c.total - c.benefit - c.risk;
  return c;
}

/// Ordering for group labels: numeric labels by value, then the rest lexically.
inline bool group_less(const std::string& a, const std::string& b) {
  char* ea = nullptr;
  char* eb = nullptr;
  const double va = std::strtod(a.c_str(), &ea);
  const double vb = std::strtod(b.c_str(), &eb);
  const bool na = !a.empty() && *ea == '\0';
  const bool nb = !b.empty() && *eb == '\0';
  if (na && nb && va != vb) return va < vb;
  if (na != nb) return na;
  return a < b;
}

}  // namespace detail

/// Distinct group labels of a matrix, numerically ordered where possible.
inline std::vector<std::string> group_labels(const ResultMatrix& m) {
  std::vector<std::string> g = m.groups();
  std::sort(g.begin(), g.end(), detail::group_less);
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

inline BerCounts ber_counts(const ResultMatrix& ym, const ResultMatrix& y0, double delta,
                            const std::optional<std::string>& group = std::nullopt) {
  check_paired(ym, y0);
  detail::check_delta(delta);
  BerCounts total;
  for (std::size_t i = 0; i < ym.rows(); ++i)
    if (!group || ym.group(i) == *group) total += detail::count_row(ym, y0, i, delta);
  return total;
}

/// BER over every row; comparisons are within an instance only.
inline BerReport ber_pairwise(const ResultMatrix& ym, const ResultMatrix& y0, double delta) {
  return make_report("overall", delta, ber_counts(ym, y0, delta));
}

/// One report per group label (numeric order), followed by "overall".
inline std::vector<BerReport> ber_grouped(const ResultMatrix& ym, const ResultMatrix& y0,
                                          double delta) {
  check_paired(ym, y0);
  detail::check_delta(delta);
  std::vector<BerReport> out;
  BerCounts overall;
  for (const auto& g : group_labels(ym)) {
    const auto c = ber_counts(ym, y0, delta, g);
    overall += c;
    out.push_back(make_report(g, delta, c));
  }
  out.push_back(make_report("overall", delta, overall));
  return out;
}

// ---------------------------------------------------------------------------
// Aggregated scores: one number per instance instead of n runs.

struct AggregatedScores {
  std::vector<double> z;
  std::string aggregator_name;
};

enum class Aggregator { Mean, Median, Min, Max };

inline std::string aggregator_name(Aggregator a) {
  switch (a) {
    case Aggregator::Mean: return "mean";
    case Aggregator::Median: return "median";
    case Aggregator::Min: return "min";
    case Aggregator::Max: return "max";
  }
  return "?";
}

/// Reduces each row's non-failed scores. A row with no scores yields NaN.
inline AggregatedScores aggregate(const ResultMatrix& m, Aggregator how) {
  AggregatedScores out{{}, aggregator_name(how)};
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::vector<double> v;
    for (std::size_t j = 0; j < m.runs(); ++j)
      if (m.score(i, j)) v.push_back(*m.score(i, j));
    if (v.empty()) {
      out.z.push_back(std::nan(""));
      continue;
    }
    std::sort(v.begin(), v.end());
    switch (how) {
      case Aggregator::Mean:
        out.z.push_back(std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()));
        break;
      case Aggregator::Median: {
        const auto h = v.size() / 2;
        out.z.push_back(v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]));
        break;
      }
      case Aggregator::Min: out.z.push_back(v.front()); break;
      case Aggregator::Max: out.z.push_back(v.back()); break;
    }
  }
  return out;
}

/// BER on one aggregated value per instance; comparisons = l.
inline BerReport ber_aggregated(const AggregatedScores& zm, const AggregatedScores& z0,
                                double delta) {
  if (zm.z.size() != z0.z.size())
    throw std::invalid_argument(
        fmt::format("aggregated score lengths differ: {} vs {}", zm.z.size(), z0.z.size()));
  if (zm.z.empty()) throw std::invalid_argument("aggregated scores are empty");
  detail::check_delta(delta);
  BerCounts c;
  for (std::size_t i = 0; i < zm.z.size(); ++i) {
    detail::classify(zm.z[i], z0.z[i], delta, c);
  }
  c.total = zm.z.size();
  c.equivalence = c.total - c.benefit - c.risk;
  return make_report("overall", delta, c);
}

// ---------------------------------------------------------------------------

struct SuccessRate {
  std::string group;
  std::uint64_t successes = 0;
  std::uint64_t runs = 0;
  double rate() const { return runs ? static_cast<double>(successes) / static_cast<double>(runs) : 0.0; }
};

/// Fraction of cells with Y exactly 0, per group then "overall". Failed cells are skipped.
inline std::vector<SuccessRate> success_rate(const ResultMatrix& m) {
  std::vector<SuccessRate> out;
  SuccessRate overall{"overall"};
  for (const auto& g : group_labels(m)) {
    SuccessRate s{g};
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (m.group(i) != g) continue;
      for (std::size_t j = 0; j < m.runs(); ++j) {
        if (!m.score(i, j)) continue;
        ++s.runs;
        s.successes += *m.score(i, j) == 0.0;
      }
    }
    overall.successes += s.successes;
    overall.runs += s.runs;
    out.push_back(s);
  }
  out.push_back(overall);
  return out;
}

struct MeanScore {
  std::string group;
  double mean = 0.0;
  std::uint64_t runs = 0;
};

inline std::vector<MeanScore> mean_score(const ResultMatrix& m) {
  std::vector<MeanScore> out;
  double all = 0.0;
  std::uint64_t all_n = 0;
  for (const auto& g : group_labels(m)) {
    double s = 0.0;
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (m.group(i) != g) continue;
      for (std::size_t j = 0; j < m.runs(); ++j)
        if (m.score(i, j)) {
          s += *m.score(i, j);
          ++n;
        }
    }
    all += s;
    all_n += n;
    out.push_back({g, n ? s / static_cast<double>(n) : 0.0, n});
  }
  out.push_back({"overall", all_n ? all / static_cast<double>(all_n) : 0.0, all_n});
  return out;
}

// ---------------------------------------------------------------------------
// AUROC identity at delta = 0

struct AurocReport {
  // From the BER triple sum at delta = 0.
  double b_mass = 0.0;
  double e_mass = 0.0;
  double r_mass = 0.0;
  // From a sort-based Mann-Whitney count, computed independently.
  double auroc = 0.0;      // P(ym < y0), ties excluded
  double tie_mass = 0.0;   // P(ym == y0)
  double above_mass = 0.0;  // P(ym > y0)
  bool b_matches_auroc = false;
  bool e_matches_ties = false;
  bool masses_sum_to_one = false;

  bool ok() const { return b_matches_auroc && e_matches_ties && masses_sum_to_one; }
};

/// Checks that at delta = 0 the benefit is the empirical AUROC and the
/// equivalence is exactly the tie mass.
inline AurocReport auroc_identity_check(const ResultMatrix& ym, const ResultMatrix& y0) {
  const BerCounts c = ber_counts(ym, y0, 0.0);
  std::uint64_t less = 0, ties = 0, greater = 0, total = 0;
  for (std::size_t i = 0; i < ym.rows(); ++i) {
    std::vector<double> a, b;
    for (std::size_t j = 0; j < ym.runs(); ++j) {
      if (!ym.score(i, j) || !y0.score(i, j)) continue;
      a.push_back(*ym.score(i, j));
      b.push_back(*y0.score(i, j));
    }
    std::sort(b.begin(), b.end());
    for (const double x : a) {
      const auto [lo, hi] = std::equal_range(b.begin(), b.end(), x);
      greater += static_cast<std::uint64_t>(lo - b.begin());
      ties += static_cast<std::uint64_t>(hi - lo);
      less += static_cast<std::uint64_t>(b.end() - hi);
    }
    total += static_cast<std::uint64_t>(a.size()) * b.size();
  }
  AurocReport rep;
  if (total == 0) return rep;
  const double t = static_cast<double>(total);
  rep.b_mass = static_cast<double>(c.benefit) / t;
  rep.e_mass = static_cast<double>(c.equivalence) / t;
  rep.r_mass = static_cast<double>(c.risk) / t;
  rep.auroc = static_cast<double>(less) / t;
  rep.tie_mass = static_cast<double>(ties) / t;
  rep.above_mass = static_cast<double>(greater) / t;
  rep.b_matches_auroc = c.benefit == less && c.total == total;
  rep.e_matches_ties = c.equivalence == ties && c.risk == greater;
  rep.masses_sum_to_one = c.benefit + c.equivalence + c.risk == c.total;
  return rep;
}

}  // namespace placebo
