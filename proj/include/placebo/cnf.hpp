#pragma once

// k-CNF formulae, DIMACS I/O and incremental evaluation under single flips.
//
// Variables are 0-indexed everywhere in this library. DIMACS text is
// 1-indexed; parse_dimacs / to_dimacs are the only places that translate.

#include <cstdint>
#include <cstdlib>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace placebo {

using Var = std::uint32_t;

/// A literal: variable index plus polarity.
class Literal {
 public:
  constexpr Literal(Var var, bool positive) : var_(var), positive_(positive) {}

  /// From a nonzero DIMACS literal (+v / -v, 1-indexed).
  static constexpr Literal from_dimacs(std::int64_t lit) {
    return lit > 0 ? Literal(static_cast<Var>(lit - 1), true)
                   : Literal(static_cast<Var>(-lit - 1), false);
  }

  constexpr Var var() const { return var_; }
  constexpr bool positive() const { return positive_; }
  constexpr std::int64_t to_dimacs() const {
    return positive_ ? std::int64_t(var_) + 1 : -(std::int64_t(var_) + 1);
  }
  constexpr bool satisfied_by(bool value) const { return value == positive_; }

  friend constexpr bool operator==(Literal, Literal) = default;

 private:
  Var var_;
  bool positive_;
};

using Clause = std::vector<Literal>;

/// Error raised by parse_dimacs; carries the 1-based line of the problem.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(fmt::format("line {}: {}", line, what)), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Occurrences of one variable inside one clause. Duplicated literals are
/// counted, so a clause holding both x and x counts pos = 2.
struct Occurrence {
  std::uint32_t clause;
  std::uint16_t pos;
  std::uint16_t neg;
};

/// Immutable k-CNF instance. Holds a flat literal store and the
/// per-variable occurrence index used by EvalState.
class CnfFormula {
 public:
  CnfFormula(std::size_t num_vars, const std::vector<Clause>& clauses, std::string source_id = {})
      : num_vars_(num_vars), source_id_(std::move(source_id)) {
    if (num_vars == 0) throw std::invalid_argument("formula must have at least one variable");
    if (clauses.empty()) throw std::invalid_argument("formula must have at least one clause");
    offsets_.reserve(clauses.size() + 1);
    offsets_.push_back(0);
    for (std::size_t c = 0; c < clauses.size(); ++c) {
      if (clauses[c].empty()) throw std::invalid_argument(fmt::format("clause {} is empty", c));
      for (const Literal lit : clauses[c]) {
        if (lit.var() >= num_vars)
          throw std::invalid_argument(
              fmt::format("clause {} mentions variable {} beyond {}", c, lit.to_dimacs(), num_vars));
        literals_.push_back(lit);
      }
      offsets_.push_back(literals_.size());
    }
    build_occurrences();
  }

  std::size_t num_vars() const { return num_vars_; }
  std::size_t num_clauses() const { return offsets_.size() - 1; }
  const std::string& source_id() const { return source_id_; }

  std::span<const Literal> clause(std::size_t c) const {
    return {literals_.data() + offsets_[c], literals_.data() + offsets_[c + 1]};
  }

  std::vector<Clause> clauses() const {
    std::vector<Clause> out;
    out.reserve(num_clauses());
    for (std::size_t c = 0; c < num_clauses(); ++c) {
      auto lits = clause(c);
      out.emplace_back(lits.begin(), lits.end());
    }
    return out;
  }

  /// Length shared by all clauses, or 0 when clause widths differ.
  std::size_t uniform_width() const {
    const std::size_t k = offsets_[1] - offsets_[0];
    for (std::size_t c = 1; c < num_clauses(); ++c)
      if (offsets_[c + 1] - offsets_[c] != k) return 0;
    return k;
  }

  std::span<const Occurrence> occurrences(Var v) const {
    return {occ_.data() + occ_offsets_[v], occ_.data() + occ_offsets_[v + 1]};
  }

  /// Structural equality (source_id excluded).
  friend bool operator==(const CnfFormula& a, const CnfFormula& b) {
    return a.num_vars_ == b.num_vars_ && a.offsets_ == b.offsets_ && a.literals_ == b.literals_;
  }

 private:
  void build_occurrences() {
    std::vector<std::vector<Occurrence>> per_var(num_vars_);
    for (std::size_t c = 0; c < num_clauses(); ++c) {
      for (const Literal lit : clause(c)) {
        // Clauses are visited in order, so clause c's entry is always the last one.
        auto& list = per_var[lit.var()];
        if (list.empty() || list.back().clause != c)
          list.push_back({static_cast<std::uint32_t>(c), 0, 0});
        (lit.positive() ? list.back().pos : list.back().neg)++;
      }
    }
    occ_offsets_.reserve(num_vars_ + 1);
    occ_offsets_.push_back(0);
    for (auto& list : per_var) {
      occ_.insert(occ_.end(), list.begin(), list.end());
      occ_offsets_.push_back(occ_.size());
    }
  }

  std::size_t num_vars_;
  std::string source_id_;
  std::vector<Literal> literals_;
  std::vector<std::size_t> offsets_;
  std::vector<Occurrence> occ_;
  std::vector<std::size_t> occ_offsets_;
};

/// Truth valuation, one byte per variable (0 = false, 1 = true).
class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(std::size_t num_vars) : bits_(num_vars, 0) {}
  explicit Assignment(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto& b : bits_) b = b ? 1 : 0;
  }

  std::size_t size() const { return bits_.size(); }
  bool operator[](Var v) const { return bits_[v] != 0; }
  void set(Var v, bool value) { bits_[v] = value ? 1 : 0; }
  void toggle(Var v) { bits_[v] ^= 1; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const Assignment&, const Assignment&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Assignment plus per-clause satisfied-literal counts.
///
/// Invariants: sat_count(c) equals a recount of clause c under assignment(),
/// and unsat_count() equals the number of clauses with sat_count 0. The
/// referenced formula must outlive the state.
class EvalState {
 public:
  EvalState(const CnfFormula& formula, Assignment assignment)
      : formula_(&formula), assignment_(std::move(assignment)) {
    if (assignment_.size() != formula.num_vars())
      throw std::invalid_argument(fmt::format("assignment has {} values, formula has {} variables",
                                              assignment_.size(), formula.num_vars()));
    rebuild();
  }

  const CnfFormula& formula() const { return *formula_; }
  const Assignment& assignment() const { return assignment_; }
  std::uint32_t sat_count(std::size_t c) const { return sat_counts_[c]; }
  std::size_t unsat_count() const { return unsat_; }

  /// Y: fraction of unsatisfied clauses. Exactly 0.0 iff the formula is satisfied.
  double unsat_fraction() const {
    return static_cast<double>(unsat_) / static_cast<double>(formula_->num_clauses());
  }

  /// Unsat clauses before minus after flipping v. Positive means the flip helps.
  long flip_gain(Var v) const {
    check_var(v);
    const bool value = assignment_[v];
    long gain = 0;
    for (const Occurrence& o : formula_->occurrences(v)) {
      const std::uint32_t now = sat_counts_[o.clause];
      const std::uint32_t t = value ? o.pos : o.neg;  // literals true now, false after
      const std::uint32_t f = value ? o.neg : o.pos;
      const std::uint32_t after = now - t + f;
      gain += (now == 0) - (after == 0);
    }
    return gain;
  }

  void apply_flip(Var v) {
    check_var(v);
    const bool value = assignment_[v];
    for (const Occurrence& o : formula_->occurrences(v)) {
      std::uint32_t& count = sat_counts_[o.clause];
      const std::uint32_t t = value ? o.pos : o.neg;
      const std::uint32_t f = value ? o.neg : o.pos;
      const std::uint32_t after = count - t + f;
      unsat_ += (after == 0);
      unsat_ -= (count == 0);
      count = after;
    }
    assignment_.toggle(v);
  }

  /// Recomputes every count from the assignment.
  void rebuild() {
    sat_counts_.assign(formula_->num_clauses(), 0);
    unsat_ = 0;
    for (std::size_t c = 0; c < formula_->num_clauses(); ++c) {
      std::uint32_t n = 0;
      for (const Literal lit : formula_->clause(c)) n += lit.satisfied_by(assignment_[lit.var()]);
      sat_counts_[c] = n;
      unsat_ += (n == 0);
    }
  }

  friend bool operator==(const EvalState& a, const EvalState& b) {
    return a.formula_ == b.formula_ && a.assignment_ == b.assignment_ &&
           a.sat_counts_ == b.sat_counts_ && a.unsat_ == b.unsat_;
  }

 private:
  void check_var(Var v) const {
    if (v >= formula_->num_vars())
      throw std::out_of_range(
          fmt::format("variable index {} out of range [0, {})", v, formula_->num_vars()));
  }

  const CnfFormula* formula_;
  Assignment assignment_;
  std::vector<std::uint32_t> sat_counts_;
  std::size_t unsat_ = 0;
};

inline double unsat_fraction(const EvalState& state) { return state.unsat_fraction(); }

// ---------------------------------------------------------------------------
// DIMACS

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline bool parse_int(std::string_view tok, std::int64_t& out) {
  if (tok.empty()) return false;
  std::size_t i = (tok[0] == '-' || tok[0] == '+') ? 1 : 0;
  if (i == tok.size()) return false;
  std::int64_t v = 0;
  for (; i < tok.size(); ++i) {
    if (tok[i] < '0' || tok[i] > '9') return false;
    v = v * 10 + (tok[i] - '0');
    if (v > (std::int64_t(1) << 40)) return false;
  }
  out = tok[0] == '-' ? -v : v;
  return true;
}

template <typename F>
void for_each_token(std::string_view line, F&& f) {
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i && !f(line.substr(i, j - i))) return;
    i = j;
  }
}

}  // namespace detail

/// Parses a DIMACS CNF document.
///
/// Accepts `c` comments, one `p cnf <n> <m>` header, then m zero-terminated
/// clauses that may span lines. The SATLIB `%` footer and a trailing lone
/// `0` are skipped. Duplicate literals and tautologies are kept verbatim.
inline CnfFormula parse_dimacs(std::string_view text, std::string source_id = {}) {
  std::size_t line_no = 0;
  bool have_header = false;
  bool footer = false;
  std::int64_t n = 0, m = 0;
  std::vector<Clause> clauses;
  Clause current;
  std::size_t current_start = 0;

  std::size_t pos = 0;
  while (pos <= text.size() && !footer) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty() || line[0] == 'c') continue;
    if (line[0] == '%') {
      footer = true;
      break;
    }
    if (line[0] == 'p') {
      if (have_header) throw ParseError(line_no, "duplicate problem line");
      std::vector<std::string_view> parts;
      detail::for_each_token(line, [&](std::string_view t) {
        parts.push_back(t);
        return true;
      });
      if (parts.size() != 4 || parts[0] != "p" || parts[1] != "cnf" ||
          !detail::parse_int(parts[2], n) || !detail::parse_int(parts[3], m))
        throw ParseError(line_no, "malformed problem line, expected 'p cnf <vars> <clauses>'");
      if (n < 1) throw ParseError(line_no, "variable count must be positive");
      if (m < 1) throw ParseError(line_no, "clause count must be positive");
      have_header = true;
      clauses.reserve(static_cast<std::size_t>(m));
      continue;
    }
    if (!have_header) throw ParseError(line_no, "clause data before 'p cnf' header");

    detail::for_each_token(line, [&](std::string_view tok) {
      std::int64_t lit = 0;
      if (!detail::parse_int(tok, lit))
        throw ParseError(line_no, fmt::format("invalid token '{}'", tok));
      if (lit == 0) {
        if (current.empty()) {
          // SATLIB files end with "%\n0"; a lone 0 after the last clause is tolerated.
          if (clauses.size() == static_cast<std::size_t>(m)) return true;
          throw ParseError(line_no, "empty clause");
        }
        clauses.push_back(std::move(current));
        current.clear();
        return true;
      }
      if (std::llabs(lit) > n)
        throw ParseError(line_no, fmt::format("literal {} out of range for {} variables", lit, n));
      if (clauses.size() == static_cast<std::size_t>(m))
        throw ParseError(line_no, fmt::format("more clauses than the declared {}", m));
      if (current.empty()) current_start = line_no;
      current.push_back(Literal::from_dimacs(lit));
      return true;
    });
  }

  if (!have_header) throw ParseError(line_no, "missing 'p cnf' header");
  if (!current.empty()) throw ParseError(current_start, "clause is not terminated by 0");
  if (clauses.size() != static_cast<std::size_t>(m))
    throw ParseError(line_no,
                     fmt::format("header declares {} clauses, found {}", m, clauses.size()));
  return CnfFormula(static_cast<std::size_t>(n), clauses, std::move(source_id));
}

/// Serializes to DIMACS: provenance comment, header, one clause per line.
inline std::string to_dimacs(const CnfFormula& f) {
  std::string out;
  out += fmt::format("c source: {}\n", f.source_id().empty() ? "unknown" : f.source_id());
  out += fmt::format("p cnf {} {}\n", f.num_vars(), f.num_clauses());
  for (std::size_t c = 0; c < f.num_clauses(); ++c) {
    for (const Literal lit : f.clause(c)) out += fmt::format("{} ", lit.to_dimacs());
    out += "0\n";
  }
  return out;
}

}  // namespace placebo
