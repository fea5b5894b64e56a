#pragma once

// SA[Flip] and its placebo counterpart.
//
// Both algorithms share one skeleton: a random valuation improved by Flip,
// then MNI iterations of M steps. Each step proposes a Hamming-distance-1
// neighbour, runs Flip on it, returns at once if it satisfies the formula,
// updates the best-so-far from the incumbent, and lets an acceptance policy
// decide whether the neighbour replaces the incumbent. The policies are the
// only difference: Metropolis with geometric cooling for SA, a coin with a
// random bias for the placebo.
//
// Draw order on the run's Rng (fixed so that paired seeds mean something):
//   1. n bits for the initial valuation, then n-1 draws for Flip's permutation;
//   2. per step: one draw for the neighbour variable, n-1 for Flip's
//      permutation, then the policy's draws (SA: one uniform, placebo: two).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include <fmt/format.h>

#include "placebo/cnf.hpp"
#include "placebo/flip.hpp"
#include "placebo/rng.hpp"

namespace placebo {

struct SolverParams {
  double t0 = 51.71;
  double alpha = 0.92;
  std::size_t m_steps = 50;
  std::size_t mni = 103;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument listing the first violated bound.
  void validate() const {
    if (!(t0 > 0.0) || !std::isfinite(t0)) throw std::invalid_argument(fmt::format("t0 must be positive, got {}", t0));
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument(fmt::format("alpha must lie in (0,1), got {}", alpha));
    validate_budget();
  }

  void validate_budget() const {
    if (m_steps < 1) throw std::invalid_argument("m_steps must be at least 1");
    if (mni < 1) throw std::invalid_argument("mni must be at least 1");
  }

  /// Upper bound on Flip applications: one for the start, one per step.
  std::size_t flip_budget() const { return 1 + m_steps * mni; }

  friend bool operator==(const SolverParams&, const SolverParams&) = default;
};

struct RunOutcome {
  Assignment best_assignment;
  double best_score = 1.0;
  std::size_t flip_calls = 0;
  std::size_t iterations_completed = 0;
  bool solved = false;
  std::chrono::nanoseconds wall_time{0};

  // Diagnostics. The returned solution follows the published best-tracking
  // rule (compare the incumbent, not the neighbour); this records the
  // minimum Y over every solution Flip produced, so the gap is measurable.
  double best_evaluated_score = 1.0;
  std::size_t steps = 0;
  std::size_t acceptances = 0;
  std::size_t worsening_proposals = 0;
  std::size_t worsening_acceptances = 0;
};

/// Equality on everything except wall_time.
inline bool same_result(const RunOutcome& a, const RunOutcome& b) {
  return a.best_assignment == b.best_assignment && a.best_score == b.best_score &&
         a.flip_calls == b.flip_calls && a.iterations_completed == b.iterations_completed &&
         a.solved == b.solved && a.best_evaluated_score == b.best_evaluated_score &&
         a.steps == b.steps && a.acceptances == b.acceptances &&
         a.worsening_proposals == b.worsening_proposals &&
         a.worsening_acceptances == b.worsening_acceptances;
}

/// Metropolis rule: 1 if delta_y <= 0, else exp(-delta_y / t).
inline double acceptance_probability(double delta_y, double t) {
  if (!(t > 0.0)) throw std::invalid_argument(fmt::format("temperature must be positive, got {}", t));
  return delta_y <= 0.0 ? 1.0 : std::exp(-delta_y / t);
}

/// T_k = t0 * alpha^k, evaluated directly rather than by repeated products.
inline double temperature_at(double t0, double alpha, std::size_t k) {
  return t0 * std::pow(alpha, static_cast<double>(k));
}

/// Hooks into the solver loop. Derive and shadow the members you need.
struct NoRunObserver {
  void on_iteration(std::size_t /*k*/, double /*temperature*/) {}
  void on_decision(double /*delta_y*/, bool /*accepted*/) {}
  void on_best_update(double /*score*/) {}
};

class MetropolisPolicy {
 public:
  MetropolisPolicy(double t0, double alpha) : t0_(t0), alpha_(alpha), t_(t0) {}

  void begin_iteration(std::size_t k) { t_ = temperature_at(t0_, alpha_, k); }
  double temperature() const { return t_; }

  bool accept(double delta_y, Rng& rng) const {
    const double u = rng.uniform01();
    // T can underflow to 0 for tiny t0; that is the greedy limit.
    if (t_ <= 0.0) return delta_y <= 0.0;
    return u < acceptance_probability(delta_y, t_);
  }

 private:
  double t0_, alpha_, t_;
};

/// Accepts with a probability p that is itself drawn uniformly per decision.
class RandomBiasPolicy {
 public:
  void begin_iteration(std::size_t) {}
  double temperature() const { return std::nan(""); }

  bool accept(double /*delta_y*/, Rng& rng) const {
    const double p = rng.uniform01();
    const double u = rng.uniform01();
    return u < p;
  }
};

template <typename Policy, typename Observer = NoRunObserver>
RunOutcome run_guided_flip(const CnfFormula& formula, std::size_t m_steps, std::size_t mni,
                           std::uint64_t seed, Policy policy, Observer&& observer = {}) {
  const auto started = std::chrono::steady_clock::now();
  const std::size_t n = formula.num_vars();
  const double m = static_cast<double>(formula.num_clauses());
  Rng rng(seed);
  RunOutcome out;

  Assignment start(n);
  for (Var v = 0; v < n; ++v) start.set(v, rng.next_bit());
  EvalState x(formula, std::move(start));
  flip_in_place(x, rng);
  out.flip_calls = 1;

  Assignment best = x.assignment();
  std::size_t best_unsat = x.unsat_count();
  std::size_t best_evaluated = best_unsat;
  observer.on_best_update(static_cast<double>(best_unsat) / m);

  auto finish = [&](RunOutcome& o) -> RunOutcome {
    o.best_assignment = std::move(best);
    o.best_score = static_cast<double>(best_unsat) / m;
    o.solved = best_unsat == 0;
    o.best_evaluated_score = static_cast<double>(best_evaluated) / m;
    o.wall_time = std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::steady_clock::now() - started);
    return std::move(o);
  };

  EvalState neighbour = x;
  for (std::size_t k = 0; k < mni; ++k) {
    if (x.unsat_count() == 0) return finish(out);
    policy.begin_iteration(k);
    observer.on_iteration(k, policy.temperature());
    for (std::size_t step = 0; step < m_steps; ++step) {
      neighbour = x;
      neighbour.apply_flip(static_cast<Var>(rng.below(n)));
      flip_in_place(neighbour, rng);
      ++out.flip_calls;
      ++out.steps;
      best_evaluated = std::min(best_evaluated, neighbour.unsat_count());

      if (neighbour.unsat_count() == 0) {
        best = neighbour.assignment();
        best_unsat = 0;
        observer.on_best_update(0.0);
        return finish(out);
      }
      if (x.unsat_count() < best_unsat) {
        best = x.assignment();
        best_unsat = x.unsat_count();
        observer.on_best_update(static_cast<double>(best_unsat) / m);
      }

      const double delta_y =
          (static_cast<double>(neighbour.unsat_count()) - static_cast<double>(x.unsat_count())) / m;
      const bool accepted = policy.accept(delta_y, rng);
      observer.on_decision(delta_y, accepted);
      if (delta_y > 0.0) {
        ++out.worsening_proposals;
        out.worsening_acceptances += accepted;
      }
      if (accepted) {
        ++out.acceptances;
        std::swap(x, neighbour);
      }
    }
    out.iterations_completed = k + 1;
  }
  return finish(out);
}

/// SA[Flip]: Metropolis acceptance under geometric cooling.
template <typename Observer = NoRunObserver>
RunOutcome run_sa_flip(const CnfFormula& formula, const SolverParams& params,
                       Observer&& observer = {}) {
  params.validate();
  return run_guided_flip(formula, params.m_steps, params.mni, params.seed,
                         MetropolisPolicy(params.t0, params.alpha),
                         std::forward<Observer>(observer));
}

/// The placebo: same skeleton and budget, acceptance with a random bias.
/// Only m_steps, mni and seed are read; t0 and alpha are ignored.
template <typename Observer = NoRunObserver>
RunOutcome run_placebo_flip(const CnfFormula& formula, const SolverParams& params,
                            Observer&& observer = {}) {
  params.validate_budget();
  return run_guided_flip(formula, params.m_steps, params.mni, params.seed, RandomBiasPolicy{},
                         std::forward<Observer>(observer));
}

enum class Algorithm { SaFlip, PlaceboFlip };

inline std::string algorithm_label(Algorithm a) { return a == Algorithm::SaFlip ? "sa" : "placebo"; }

inline Algorithm parse_algorithm(const std::string& label) {
  if (label == "sa") return Algorithm::SaFlip;
  if (label == "placebo") return Algorithm::PlaceboFlip;
  throw std::invalid_argument(fmt::format("unknown algorithm '{}', expected 'sa' or 'placebo'", label));
}

inline RunOutcome run_algorithm(Algorithm a, const CnfFormula& formula, const SolverParams& params) {
  return a == Algorithm::SaFlip ? run_sa_flip(formula, params) : run_placebo_flip(formula, params);
}

}  // namespace placebo
