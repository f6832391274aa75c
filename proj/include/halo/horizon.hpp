#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "halo/types.hpp"

namespace halo {

// Inputs of the critical-horizon formula. lambda is the drift exponent
// (rho = e^lambda for the matched linear system), sigma2 the per-coordinate
// step-noise variance, psi the variance budget the error is allowed to reach.
struct HorizonParams {
  double lambda = 0.0;
  double sigma2 = 0.0;
  double psi = 0.0;

  void validate() const;
};

// Closed form for the step count at which the growth law crosses psi:
//   N* = (1 / 2 lambda) * ln(1 + psi (e^{2 lambda} - 1) / sigma2)
// with the lambda -> 0 limit N* = psi / sigma2 taken explicitly for
// |lambda| < 1e-9 (the formula is the fixpoint of trace_bound with
// trace0 = 0 and rho = e^lambda). Returns a real step count, not rounded.
double critical_horizon(const HorizonParams& params);

// Cross-check of the closed form against the discrete recursion.
struct HorizonReport {
  double n_star = 0.0;      // closed form (real)
  int n_star_ceil = 0;      // first integer step with predicted crossing, >= 1
  int crossing = 0;         // first step n (1-based) with trace_bound(n) >= psi
  double gap = 0.0;         // |n_star - crossing|
};

// Builds the trace_bound series from trace0 = 0 and locates the first
// crossing; sigma2 == 0 with psi > 0 never crosses and is a validation error
// (the closed form has no solution either).
HorizonReport horizon_consistency(const HorizonParams& params);

// Success-probability surface over (chain length, difficulty). Difficulty is
// the planted drift exponent lambda of a linear system A = e^lambda * I.
struct PhaseSweepConfig {
  int d = 4;
  double sigma2 = 0.01;
  std::vector<int> lengths;       // chain lengths N (columns of the grid)
  std::vector<double> lambdas;    // difficulty rows
  int n_seeds = 200;              // Monte Carlo runs per cell
  double success_tol = 0.6728;    // per-coordinate tolerance; a run succeeds
                                  // iff ||delta_N||_2 <= success_tol*sqrt(d)
  std::uint64_t base_seed = 1;
  int jobs = 1;                   // worker threads (seeds are pre-derived, so
                                  // results do not depend on this)
};

struct PhaseGrid {
  std::vector<int> lengths;
  std::vector<double> lambdas;
  // success_rates[row][col] for lambdas[row], lengths[col]
  std::vector<std::vector<double>> success_rates;
  std::vector<std::vector<int>> diverged;  // divergent runs per cell (counted as failures)
  int n_seeds = 0;
  double success_tol = 0.0;
  int d = 0;
  double sigma2 = 0.0;
};

PhaseGrid phase_sweep(const PhaseSweepConfig& config);

// The psi that makes critical_horizon comparable with a sweep's success
// criterion: the per-coordinate variance level success_tol^2 (equivalently
// trace d*tol^2 against trace noise d*sigma2; the ratio psi/sigma2 is all
// that enters N*).
inline double matched_psi(double success_tol) { return success_tol * success_tol; }

// Linearly interpolated 50%-success chain length of one grid row, if the row
// crosses 0.5. Rows that never cross return no value.
std::optional<double> half_success_length(const PhaseGrid& grid, std::size_t row);

}  // namespace halo
