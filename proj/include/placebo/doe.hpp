#pragma once

// Parameter tuning by designed experiments over (T0, alpha, M, MNI):
// a Box-Behnken screening design, a 2^(4-1) half-fraction with D = ABC,
// contrast-based effect estimates, and a steepest-descent walk on the
// half-fraction until the Flip budget M * MNI passes a limit.

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "placebo/rng.hpp"
#include "placebo/solver.hpp"

namespace placebo {

enum Factor : std::size_t { kT0 = 0, kAlpha = 1, kM = 2, kMni = 3 };
inline constexpr std::size_t kFactorCount = 4;
inline constexpr std::array<const char*, kFactorCount> kFactorNames = {"T0", "alpha", "M", "MNI"};

struct FactorSpec {
  std::string name;
  double low = 0.0;
  double medium = 0.0;
  double high = 0.0;
  double half_distance = 0.0;
  bool integral = false;

  void validate() const {
    if (!(low < medium && medium < high))
      throw std::invalid_argument(fmt::format("factor {}: levels must satisfy low < medium < high", name));
    if (!(half_distance > 0.0))
      throw std::invalid_argument(fmt::format("factor {}: half-distance must be positive", name));
  }

  double level(int coded) const { return coded < 0 ? low : coded > 0 ? high : medium; }
};

/// Screening levels and calibration half-distances used by default.
inline std::array<FactorSpec, kFactorCount> default_factors() {
  return {{
      {"T0", 1.0, 100.0, 1000.0, 10.0, false},
      {"alpha", 0.5, 0.85, 0.99, 0.04, false},
      {"M", 1.0, 10.0, 20.0, 5.0, true},
      {"MNI", 10.0, 50.0, 100.0, 10.0, true},
  }};
}

inline std::array<double, kFactorCount> default_half_distances() { return {10.0, 0.04, 5.0, 10.0}; }

using CodedRow = std::array<int, kFactorCount>;

struct DesignMatrix {
  std::string design_name;
  std::vector<CodedRow> coded;
  std::vector<SolverParams> decoded;
  std::vector<std::string> blocks;
  std::vector<std::string> notes;
};

namespace detail {

/// Round half up; used for M and MNI.
inline double round_half_up(double x) { return std::floor(x + 0.5); }

inline SolverParams params_from(const std::array<double, kFactorCount>& v) {
  SolverParams p;
  p.t0 = v[kT0];
  p.alpha = v[kAlpha];
  p.m_steps = static_cast<std::size_t>(round_half_up(v[kM]));
  p.mni = static_cast<std::size_t>(round_half_up(v[kMni]));
  return p;
}

inline std::array<double, kFactorCount> values_of(const SolverParams& p) {
  return {p.t0, p.alpha, static_cast<double>(p.m_steps), static_cast<double>(p.mni)};
}

inline bool integral_factor(std::size_t f) { return f == kM || f == kMni; }

}  // namespace detail

/// Four-factor Box-Behnken: for each of the 6 factor pairs the four (+-1, +-1)
/// corners with the other two factors at 0, then `center_points` all-zero rows.
inline DesignMatrix box_behnken_4(std::span<const FactorSpec> factors, std::size_t center_points = 3) {
  if (factors.size() != kFactorCount)
    throw std::invalid_argument(fmt::format("Box-Behnken needs 4 factors, got {}", factors.size()));
  if (center_points < 1) throw std::invalid_argument("at least one center point is required");
  for (const auto& f : factors) f.validate();

  DesignMatrix d;
  d.design_name = "box-behnken-4";
  for (std::size_t a = 0; a < kFactorCount; ++a)
    for (std::size_t b = a + 1; b < kFactorCount; ++b)
      for (int lb : {-1, 1})
        for (int la : {-1, 1}) {
          CodedRow row{};
          row[a] = la;
          row[b] = lb;
          d.coded.push_back(row);
        }
  for (std::size_t c = 0; c < center_points; ++c) d.coded.push_back(CodedRow{});

  for (const auto& row : d.coded) {
    std::array<double, kFactorCount> v{};
    for (std::size_t f = 0; f < kFactorCount; ++f) {
      v[f] = factors[f].level(row[f]);
      if (factors[f].integral && detail::round_half_up(v[f]) != v[f])
        d.notes.push_back(fmt::format("{} level {} rounded to {}", factors[f].name, v[f],
                                      detail::round_half_up(v[f])));
    }
    d.decoded.push_back(detail::params_from(v));
  }
  d.notes.push_back(fmt::format("center points: {}", center_points));
  return d;
}

/// 2^(4-1) half-fraction, generator D = ABC (resolution IV). Rows in standard
/// order on A, B, C with A varying fastest. Each coordinate decodes to
/// center +- half_distance; M and MNI are rounded half-up.
inline DesignMatrix fractional_factorial_2_4_1(const SolverParams& center,
                                               const std::array<double, kFactorCount>& half_distances) {
  for (std::size_t f = 0; f < kFactorCount; ++f)
    if (!(half_distances[f] > 0.0))
      throw std::invalid_argument(
          fmt::format("half-distance of {} must be positive, got {}", kFactorNames[f], half_distances[f]));

  const auto c = detail::values_of(center);
  DesignMatrix d;
  d.design_name = "fractional-factorial-2^(4-1), D=ABC";
  for (int i = 0; i < 8; ++i) {
    const int a = (i & 1) ? 1 : -1;
    const int b = (i & 2) ? 1 : -1;
    const int cc = (i & 4) ? 1 : -1;
    const CodedRow row{a, b, cc, a * b * cc};
    std::array<double, kFactorCount> v{};
    for (std::size_t f = 0; f < kFactorCount; ++f) {
      v[f] = c[f] + row[f] * half_distances[f];
      if (detail::integral_factor(f) && detail::round_half_up(v[f]) != v[f])
        d.notes.push_back(fmt::format("row {}: {} = {} rounded to {}", i, kFactorNames[f], v[f],
                                      detail::round_half_up(v[f])));
    }
    if (!(v[kT0] > 0.0) || !(v[kAlpha] > 0.0 && v[kAlpha] < 1.0) ||
        detail::round_half_up(v[kM]) < 1.0 || detail::round_half_up(v[kMni]) < 1.0)
      throw std::invalid_argument(
          fmt::format("design row {} leaves the valid region: T0={}, alpha={}, M={}, MNI={}", i,
                      v[kT0], v[kAlpha], v[kM], v[kMni]));
    auto p = detail::params_from(v);
    p.seed = center.seed;
    d.coded.push_back(row);
    d.decoded.push_back(p);
  }
  return d;
}

struct InteractionEffect {
  std::size_t first;
  std::size_t second;
  double value;
  std::string alias;  // empty when the design does not confound it
};

struct EffectReport {
  std::array<double, kFactorCount> main_effects{};
  std::vector<InteractionEffect> interactions;
  double intercept = 0.0;
  bool balanced = true;
  std::optional<double> center_mean;
  std::optional<double> curvature;  // factorial mean minus center mean; diagnostic only

  double interaction(std::size_t a, std::size_t b) const {
    if (a > b) std::swap(a, b);
    for (const auto& e : interactions)
      if (e.first == a && e.second == b) return e.value;
    throw std::out_of_range("no such interaction");
  }
};

namespace detail {

template <typename Sign>
double contrast(const DesignMatrix& d, std::span<const double> y, Sign sign, bool& balanced) {
  double plus = 0.0, minus = 0.0;
  std::size_t np = 0, nm = 0;
  for (std::size_t r = 0; r < d.coded.size(); ++r) {
    const int s = sign(d.coded[r]);
    if (s > 0) {
      plus += y[r];
      ++np;
    } else if (s < 0) {
      minus += y[r];
      ++nm;
    }
  }
  if (np != nm) balanced = false;
  if (np == 0 || nm == 0) return 0.0;
  return plus / static_cast<double>(np) - minus / static_cast<double>(nm);
}

inline bool is_center(const CodedRow& r) {
  for (int v : r)
    if (v != 0) return false;
  return true;
}

}  // namespace detail

/// Main effect of F: mean(y | F=+1) - mean(y | F=-1). Interaction (F, G):
/// mean(y | FG=+1) - mean(y | FG=-1) over rows where both are nonzero.
/// Center rows only feed the curvature diagnostic.
inline EffectReport estimate_effects(const DesignMatrix& design, std::span<const double> responses) {
  if (responses.size() != design.coded.size())
    throw std::invalid_argument(fmt::format("design has {} rows but {} responses were given",
                                            design.coded.size(), responses.size()));
  for (double y : responses)
    if (!std::isfinite(y)) throw std::invalid_argument("responses must be finite");

  EffectReport rep;
  for (std::size_t f = 0; f < kFactorCount; ++f)
    rep.main_effects[f] =
        detail::contrast(design, responses, [f](const CodedRow& r) { return r[f]; }, rep.balanced);

  const bool half_fraction = design.design_name.rfind("fractional-factorial", 0) == 0;
  for (std::size_t a = 0; a < kFactorCount; ++a)
    for (std::size_t b = a + 1; b < kFactorCount; ++b) {
      InteractionEffect e{a, b,
                          detail::contrast(design, responses,
                                           [a, b](const CodedRow& r) { return r[a] * r[b]; },
                                           rep.balanced),
                          {}};
      if (half_fraction) {
        std::size_t others[2], k = 0;
        for (std::size_t f = 0; f < kFactorCount; ++f)
          if (f != a && f != b) others[k++] = f;
        e.alias = fmt::format("{}x{}", kFactorNames[others[0]], kFactorNames[others[1]]);
      }
      rep.interactions.push_back(std::move(e));
    }

  double fsum = 0.0, csum = 0.0;
  std::size_t fn = 0, cn = 0;
  for (std::size_t r = 0; r < design.coded.size(); ++r) {
    if (detail::is_center(design.coded[r])) {
      csum += responses[r];
      ++cn;
    } else {
      fsum += responses[r];
      ++fn;
    }
  }
  rep.intercept = fn ? fsum / static_cast<double>(fn) : 0.0;
  if (cn) {
    rep.center_mean = csum / static_cast<double>(cn);
    rep.curvature = rep.intercept - *rep.center_mean;
  }
  return rep;
}

// ---------------------------------------------------------------------------

/// Maps candidate parameters to a mean response (lower is better).
using Evaluator = std::function<double(const SolverParams&)>;

struct ScreeningResult {
  DesignMatrix design;
  std::vector<double> responses;
  EffectReport effects;
};

/// Runs the Box-Behnken design with common random numbers: every row is
/// evaluated with the same seed, so differences come from the factors.
inline ScreeningResult run_screening(std::span<const FactorSpec> factors, std::size_t center_points,
                                     std::uint64_t block_seed, const Evaluator& evaluator) {
  ScreeningResult out{box_behnken_4(factors, center_points), {}, {}};
  for (auto& p : out.design.decoded) {
    p.seed = block_seed;
    out.design.blocks.push_back(fmt::format("seed-block:{}", block_seed));
  }
  for (const auto& p : out.design.decoded) out.responses.push_back(evaluator(p));
  out.effects = estimate_effects(out.design, out.responses);
  return out;
}

struct RsmOptions {
  std::size_t budget_limit = 5000;  // stop once M * MNI exceeds this
  double dead_band = 0.0;           // |effect| <= dead_band counts as no signal
  std::size_t max_iterations = 200;
  std::uint64_t master_seed = 0;
};

struct RsmStep {
  std::size_t iteration = 0;
  SolverParams center;
  DesignMatrix design;
  std::vector<double> responses;
  EffectReport effects;
  std::array<int, kFactorCount> moves{};  // -1, 0 or +1 half-distance per factor
  SolverParams next_center;
  std::string decision;
};

struct RsmResult {
  std::vector<RsmStep> trace;
  SolverParams final_params;
  std::string stop_reason;
};

/// Raised when the evaluator throws; keeps the steps completed so far.
class RsmAborted : public std::runtime_error {
 public:
  RsmAborted(const std::string& what, RsmResult partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const RsmResult& partial() const { return partial_; }

 private:
  RsmResult partial_;
};

namespace detail {

/// Keeps the center far enough inside the valid region that the whole
/// half-fraction around it is valid.
inline SolverParams clamp_center(SolverParams p, const std::array<double, kFactorCount>& h) {
  constexpr double eps = 1e-6;
  p.t0 = std::max(p.t0, h[kT0] + eps);
  p.alpha = std::clamp(p.alpha, h[kAlpha] + eps, 1.0 - h[kAlpha] - eps);
  const auto min_m = static_cast<std::size_t>(std::ceil(1.0 + h[kM]));
  const auto min_mni = static_cast<std::size_t>(std::ceil(1.0 + h[kMni]));
  p.m_steps = std::max(p.m_steps, min_m);
  p.mni = std::max(p.mni, min_mni);
  return p;
}

}  // namespace detail

/// Steepest descent on successive 2^(4-1) designs. Each iteration evaluates
/// the design around the current center with fresh seeds per row, then moves
/// every factor whose main effect exceeds the dead band one half-distance
/// against the sign of its effect. Stops when no effect exceeds the dead
/// band, when M * MNI of the new center exceeds budget_limit, or after
/// max_iterations.
inline RsmResult rsm_walk(const SolverParams& start, const std::array<double, kFactorCount>& half_distances,
                          const RsmOptions& options, const Evaluator& evaluator) {
  for (std::size_t f = 0; f < kFactorCount; ++f)
    if (!(half_distances[f] > 0.0))
      throw std::invalid_argument(
          fmt::format("half-distance of {} must be positive", kFactorNames[f]));
  if (!(half_distances[kAlpha] < 0.5))
    throw std::invalid_argument("alpha half-distance must be below 0.5");

  RsmResult result;
  SolverParams center = detail::clamp_center(start, half_distances);
  if (center.m_steps * center.mni > options.budget_limit) {
    result.final_params = center;
    result.stop_reason = "budget already exceeded at start";
    return result;
  }

  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    RsmStep step;
    step.iteration = it;
    step.center = center;
    step.design = fractional_factorial_2_4_1(center, half_distances);
    for (std::size_t r = 0; r < step.design.decoded.size(); ++r) {
      auto& p = step.design.decoded[r];
      p.seed = derive_seed({options.master_seed, it, r});
      try {
        step.responses.push_back(evaluator(p));
      } catch (const std::exception& e) {
        result.final_params = center;
        result.stop_reason = fmt::format("evaluator failed at iteration {}, row {}", it, r);
        throw RsmAborted(fmt::format("{}: {}", result.stop_reason, e.what()), std::move(result));
      }
    }
    step.effects = estimate_effects(step.design, step.responses);

    auto v = detail::values_of(center);
    bool any = false;
    for (std::size_t f = 0; f < kFactorCount; ++f) {
      const double eff = step.effects.main_effects[f];
      if (std::abs(eff) > options.dead_band) {
        step.moves[f] = eff > 0 ? -1 : 1;
        v[f] += step.moves[f] * half_distances[f];
        any = true;
      }
    }
    SolverParams next = detail::clamp_center(detail::params_from(v), half_distances);
    next.seed = center.seed;
    step.next_center = next;

    if (!any) {
      step.decision = "stop: every main effect inside the dead band";
      result.trace.push_back(std::move(step));
      result.final_params = center;
      result.stop_reason = "converged";
      return result;
    }
    center = next;
    if (center.m_steps * center.mni > options.budget_limit) {
      step.decision = fmt::format("stop: M*MNI = {} exceeds {}", center.m_steps * center.mni,
                                  options.budget_limit);
      result.trace.push_back(std::move(step));
      result.final_params = center;
      result.stop_reason = "budget";
      return result;
    }
    step.decision = "move";
    result.trace.push_back(std::move(step));
  }
  result.final_params = center;
  result.stop_reason = "iteration cap";
  return result;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const SolverParams& p) {
  return {{"t0", p.t0}, {"alpha", p.alpha}, {"m_steps", p.m_steps}, {"mni", p.mni}, {"seed", p.seed}};
}

inline SolverParams params_from_json(const nlohmann::json& j, SolverParams base = {}) {
  if (j.contains("t0")) base.t0 = j.at("t0").get<double>();
  if (j.contains("alpha")) base.alpha = j.at("alpha").get<double>();
  if (j.contains("m_steps")) base.m_steps = j.at("m_steps").get<std::size_t>();
  if (j.contains("mni")) base.mni = j.at("mni").get<std::size_t>();
  if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
  return base;
}

inline nlohmann::json to_json(const DesignMatrix& d) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < d.coded.size(); ++r) {
    nlohmann::json row = {{"coded", d.coded[r]}, {"params", to_json(d.decoded[r])}};
    if (r < d.blocks.size()) row["block"] = d.blocks[r];
    rows.push_back(row);
  }
  return {{"design", d.design_name}, {"rows", rows}, {"notes", d.notes}};
}

inline nlohmann::json to_json(const EffectReport& e) {
  nlohmann::json main = nlohmann::json::object();
  for (std::size_t f = 0; f < kFactorCount; ++f) main[kFactorNames[f]] = e.main_effects[f];
  nlohmann::json inter = nlohmann::json::array();
  for (const auto& i : e.interactions) {
    nlohmann::json x = {{"factors", {kFactorNames[i.first], kFactorNames[i.second]}}, {"value", i.value}};
    if (!i.alias.empty()) x["aliased_with"] = i.alias;
    inter.push_back(x);
  }
  nlohmann::json j = {{"main_effects", main}, {"interactions", inter}, {"intercept", e.intercept},
                      {"balanced", e.balanced}};
  if (e.center_mean) j["center_mean"] = *e.center_mean;
  if (e.curvature) j["curvature"] = *e.curvature;
  return j;
}

inline nlohmann::json to_json(const RsmResult& r) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : r.trace)
    steps.push_back({{"iteration", s.iteration},
                     {"center", to_json(s.center)},
                     {"design", to_json(s.design)},
                     {"responses", s.responses},
                     {"effects", to_json(s.effects)},
                     {"moves", s.moves},
                     {"next_center", to_json(s.next_center)},
                     {"decision", s.decision}});
  return {{"trace", steps}, {"final_params", to_json(r.final_params)}, {"stop_reason", r.stop_reason}};
}

}  // namespace placebo
