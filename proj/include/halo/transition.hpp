#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "halo/types.hpp"

namespace halo {

// Residual update rule S_{t+1} = S_t + G(S_t) + xi_t. A TransitionMap supplies
// G and its Jacobian dG/dS; the one-step linearization is A = I + J. All
// families are immutable after construction and deterministic: evaluate() has
// no hidden state, and the only time dependence allowed in the library is the
// explicit schedule of the piecewise-switched family.

// G(S) = J * S with a planted J. The one-step matrix A = I + J is what the
// factories control directly.
struct LinearResidual {
  Mat J;
};

// G(S) = W * tanh(S) elementwise. Lipschitz by construction: the weight matrix
// is rescaled ("clipped") at build time so that its spectral norm equals the
// requested bound, and |d tanh| <= 1 does the rest.
struct RandomTanhNet {
  Mat W;
};

// Time-switched linear residuals: segment k = (t / period) % segments.size().
// The only non-autonomous family; everything else ignores t.
struct PiecewiseSwitched {
  std::vector<Mat> segments;  // the J of each segment
  int period = 1;
};

class TransitionMap {
 public:
  // --- factories -----------------------------------------------------------
  // Planted J given explicitly.
  static TransitionMap linear(Mat J);
  // A = rho * I (so spectral norm, spectral radius and every singular value
  // equal rho; the scalar growth law is exact per coordinate).
  static TransitionMap linear_isotropic(int d, double rho);
  // A = rho * Q with Q a seeded random rotation. ||A||_2 = rho and A^T A =
  // rho^2 I, so the isotropic covariance recursion stays exact while the
  // dynamics mix coordinates.
  static TransitionMap linear_rotation(int d, double rho, std::uint64_t seed);
  // Seeded random W rescaled to ||W||_2 == lipschitz.
  static TransitionMap tanh_net(int d, double lipschitz, std::uint64_t seed);
  // Scalar-per-segment convenience: segment k has A = rho_k * I.
  static TransitionMap switched_isotropic(int d, const std::vector<double>& rhos, int period);
  static TransitionMap switched(std::vector<Mat> segments, int period);

  int dim() const { return d_; }

  // G(S) at time t (t matters only for the switched family).
  Vec evaluate(const Vec& s, long t = 0) const;

  // Analytic Jacobian dG/dS at (s, t).
  Mat jacobian(const Vec& s, long t = 0) const;

  const char* family_name() const;

 private:
  TransitionMap(int d, std::variant<LinearResidual, RandomTanhNet, PiecewiseSwitched> impl)
      : d_(d), impl_(std::move(impl)) {}
  int d_;
  std::variant<LinearResidual, RandomTanhNet, PiecewiseSwitched> impl_;
};

}  // namespace halo
