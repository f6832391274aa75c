#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "halo/dynamics.hpp"
#include "halo/types.hpp"

namespace halo {

// Second-moment state of the linearized error delta_{t+1} = A delta_t + xi_t.
struct CovarianceState {
  Mat sigma;  // symmetric PSD, d x d

  // Throws ValidationError unless sigma is square, symmetric within 1e-9 and
  // has all eigenvalues >= -1e-10 (numerical PSD).
  void validate() const;
};

// Parameters of the scalar trace growth law
//   T_n = rho^(2n) * T_0 + sigma2 * sum_{k=0}^{n-1} rho^(2k)
// where rho is a spectral magnitude of the one-step matrix A. With rho taken
// as the spectral *norm* the law upper-bounds the true covariance growth for
// any A (the norm, not the radius, is what survives the submultiplicative
// argument); for A with A^T A = rho^2 I it is exact.
struct GrowthBoundParams {
  double rho = 1.0;
  double sigma2 = 0.0;
  double trace0 = 0.0;

  void validate() const;
};

// One step of the exact covariance recursion Sigma' = A Sigma A^T + sigma2 I,
// re-symmetrized to keep the invariant under floating point.
CovarianceState propagate_covariance(const CovarianceState& cov, const Mat& a, double sigma2);

// T_n under the growth law above. Evaluated by iterating the scalar recursion
// s <- (rho*s)*rho + sigma2 rather than with pow(): the iteration is the exact
// scalar image of propagate_covariance (bit-for-bit for 1x1 systems) and has
// no rho == 1 singularity (the geometric-series limit n*sigma2 falls out of
// the loop by itself).
double trace_bound(int n, const GrowthBoundParams& params);

struct EmpiricalTrace {
  std::vector<double> traces;   // traces[t] = Tr of sample covariance after step t+1
  std::vector<double> stderrs;  // Gaussian-approx standard error of each trace
  int n_samples = 0;
  int diverged = 0;             // samples excluded because they stopped being finite
};

// Monte Carlo oracle for the covariance recursion: n_samples independent
// noisy rollouts from s0, each compared against the shared noiseless ideal
// path (delta_t = S_t - S*_t; for linear maps this IS the linearized error
// process). Returns the trace of the unbiased sample covariance of delta_t
// after each step. Per-sample seeds are derived from noise.seed, so the
// result does not depend on execution order or sharding.
EmpiricalTrace empirical_trace(const TransitionMap& map, const Vec& s0, const NoiseModel& noise,
                               int n_steps, int n_samples);

// First index i with traces[i] >= psi, if any.
std::optional<std::size_t> crossing_step(const std::vector<double>& traces, double psi);

}  // namespace halo
