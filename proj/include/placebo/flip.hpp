#pragma once

// The Flip heuristic: sweep the variables in one random order, keep every
// flip whose gain is non-negative, and repeat the sweep until a full pass
// improves nothing.

#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "placebo/cnf.hpp"
#include "placebo/rng.hpp"

namespace placebo {

struct FlipStats {
  std::size_t flips_applied = 0;
  std::size_t passes = 0;
};

struct FlipOutcome {
  Assignment assignment;
  std::size_t flips_applied = 0;
  std::size_t passes = 0;
  double final_score = 0.0;
};

/// Observer that ignores every event.
struct NoFlipObserver {
  void operator()(const EvalState&, Var, long, bool) const {}
};

/// Fisher-Yates shuffle of [0, n): for i = n-1 .. 1 swap(i, below(i+1)).
/// Consumes exactly n-1 draws.
inline std::vector<Var> random_permutation(std::size_t n, Rng& rng) {
  std::vector<Var> perm(n);
  std::iota(perm.begin(), perm.end(), Var{0});
  for (std::size_t i = n; i-- > 1;) std::swap(perm[i], perm[rng.below(i + 1)]);
  return perm;
}

/// Runs Flip on `state` in place.
///
/// The permutation is drawn once and reused by every pass. Zero-gain flips
/// are kept and add nothing to the pass improvement, so a pass made only of
/// sideways moves ends the loop. The observer sees the state before each
/// decision together with the candidate variable, its gain and whether
/// the flip is kept.
template <typename Observer = NoFlipObserver>
FlipStats flip_in_place(EvalState& state, Rng& rng, Observer&& observer = {}) {
  const auto order = random_permutation(state.formula().num_vars(), rng);
  FlipStats stats;
  long improvement = 1;
  while (improvement > 0) {
    improvement = 0;
    ++stats.passes;
    for (const Var v : order) {
      // Equivalent to flip-then-measure-then-maybe-undo, without the undo.
      const long gain = state.flip_gain(v);
      const bool keep = gain >= 0;
      observer(std::as_const(state), v, gain, keep);
      if (keep) {
        state.apply_flip(v);
        improvement += gain;
        ++stats.flips_applied;
      }
    }
  }
  return stats;
}

inline FlipOutcome flip(EvalState state, Rng& rng) {
  const auto stats = flip_in_place(state, rng);
  return {state.assignment(), stats.flips_applied, stats.passes, state.unsat_fraction()};
}

}  // namespace placebo
