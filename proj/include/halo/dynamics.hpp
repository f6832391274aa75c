#pragma once

#include <cstdint>

#include "halo/rng.hpp"
#include "halo/transition.hpp"
#include "halo/types.hpp"

namespace halo {

// Isotropic Gaussian step noise xi ~ N(0, sigma2 * I). Immutable description;
// draws come from a NoiseStream bound to it.
struct NoiseModel {
  double sigma2 = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Stateful sampler for a NoiseModel. Each draw(d) consumes exactly d Gaussian
// variates (even at sigma2 == 0, so stream positions stay aligned across
// configurations that differ only in noise level).
class NoiseStream {
 public:
  // stream_id selects an independent substream of the model's seed; dynamics
  // and observation noise must use different ids (see StreamId).
  explicit NoiseStream(const NoiseModel& model, std::uint64_t stream_id = kStreamDynamics);

  Vec draw(int d);
  double sigma2() const { return sigma2_; }

 private:
  Rng rng_;
  double sigma2_;
  double stddev_;
};

// One residual update: returns S + G(S) + xi with xi drawn from `noise`.
// Throws DivergenceError{step_index,...} if the result is not finite.
Vec step(const TransitionMap& map, const Vec& state, NoiseStream& noise, long t = 0);

// Open-loop rollout of n_steps. The returned trajectory carries both the noisy
// path (dynamics substream of noise.seed) and the noiseless ideal path from
// the same s0; per-step observables are zero-filled (no observer attached).
Trajectory simulate_open_loop(const TransitionMap& map, const Vec& s0, const NoiseModel& noise,
                              int n_steps);

// Central-difference estimate of dG/dS at `state` (step size h on each
// coordinate). Cross-check for TransitionMap::jacobian.
Mat jacobian_fd(const TransitionMap& map, const Vec& state, double h = 1e-6, long t = 0);

struct SpectralNormResult {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Largest singular value via power iteration on M^T M. The start vector is a
// fixed, slightly tilted direction so results are deterministic; `tol` is the
// relative change between iterates at which we declare convergence.
SpectralNormResult spectral_norm(const Mat& m, int max_iters = 200, double tol = 1e-12);

// Finite-time top Lyapunov exponent along a noisy trajectory, Benettin style:
// average of ln ||(I + J_t) u_t|| with the tangent u_t renormalized each step.
// The tangent start direction is derived from noise.seed. Requires
// n_steps >= 10; throws DegenerateDirectionError if the tangent collapses.
double lyapunov_estimate(const TransitionMap& map, const Vec& s0, const NoiseModel& noise,
                         int n_steps);

}  // namespace halo
