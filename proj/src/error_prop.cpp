#include "halo/error_prop.hpp"

#include <cmath>

#include "halo/errors.hpp"
#include "halo/rng.hpp"

namespace halo {

void CovarianceState::validate() const {
  if (sigma.rows() != sigma.cols() || sigma.rows() < 1)
    throw ValidationError("CovarianceState: sigma must be square and non-empty");
  if (!sigma.allFinite()) throw ValidationError("CovarianceState: sigma must be finite");
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw ValidationError("CovarianceState: sigma must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(sigma, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw ValidationError("CovarianceState: sigma must be positive semidefinite");
}

void GrowthBoundParams::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho))
    throw ValidationError("GrowthBoundParams: rho must be finite and > 0");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2))
    throw ValidationError("GrowthBoundParams: sigma2 must be finite and >= 0");
  if (!(trace0 >= 0.0) || !std::isfinite(trace0))
    throw ValidationError("GrowthBoundParams: trace0 must be finite and >= 0");
}

CovarianceState propagate_covariance(const CovarianceState& cov, const Mat& a, double sigma2) {
  if (a.rows() != a.cols() || a.rows() != cov.sigma.rows())
    throw ValidationError("propagate_covariance: A and Sigma dimensions must agree");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2))
    throw ValidationError("propagate_covariance: sigma2 must be finite and >= 0");
  Mat next = a * cov.sigma * a.transpose();
  next.diagonal().array() += sigma2;
  // Re-symmetrize: A Sigma A^T is symmetric in exact arithmetic but floating
  // point leaves ~ulp skew that would compound over long recursions.
  next = 0.5 * (next + next.transpose()).eval();
  return CovarianceState{std::move(next)};
}

double trace_bound(int n, const GrowthBoundParams& params) {
  if (n < 0) throw ValidationError("trace_bound: n must be >= 0");
  params.validate();
  // Iterative form of rho^(2n)*T_0 + sigma2 * sum rho^(2k); see header for
  // why this is preferred over the closed form (exactness, rho == 1 limit).
  double s = params.trace0;
  for (int k = 0; k < n; ++k) s = (params.rho * s) * params.rho + params.sigma2;
  return s;
}

EmpiricalTrace empirical_trace(const TransitionMap& map, const Vec& s0, const NoiseModel& noise,
                               int n_steps, int n_samples) {
  if (n_steps < 1) throw ValidationError("empirical_trace: n_steps must be >= 1");
  if (n_samples < 2) throw ValidationError("empirical_trace: n_samples must be >= 2");
  if (s0.size() != map.dim()) throw ValidationError("empirical_trace: s0 dimension mismatch");
  const int d = map.dim();

  // Shared noiseless reference path.
  std::vector<Vec> ideal(n_steps + 1);
  ideal[0] = s0;
  for (int t = 0; t < n_steps; ++t) {
    ideal[t + 1] = ideal[t] + map.evaluate(ideal[t], t);
    if (!ideal[t + 1].allFinite())
      throw DivergenceError(static_cast<std::size_t>(t), ideal[t].norm());
  }

  // Accumulate per-step sums of delta and delta*delta^T across samples.
  std::vector<Vec> sum(n_steps, Vec::Zero(d));
  std::vector<Mat> sumsq(n_steps, Mat::Zero(d, d));
  std::vector<int> alive(n_steps, 0);
  int diverged = 0;

  for (int i = 0; i < n_samples; ++i) {
    NoiseModel sample_noise{noise.sigma2, Rng::derive(noise.seed, 1000003ULL + i)};
    NoiseStream stream(sample_noise, kStreamDynamics);
    Vec s = s0;
    try {
      for (int t = 0; t < n_steps; ++t) {
        s = step(map, s, stream, t);
        Vec delta = s - ideal[t + 1];
        sum[t] += delta;
        sumsq[t] += delta * delta.transpose();
        alive[t] += 1;
      }
    } catch (const DivergenceError&) {
      ++diverged;  // sample contributes up to its last finite step
    }
  }

  EmpiricalTrace result;
  result.n_samples = n_samples;
  result.diverged = diverged;
  result.traces.resize(n_steps);
  result.stderrs.resize(n_steps);
  for (int t = 0; t < n_steps; ++t) {
    const int n = alive[t];
    if (n < 2) throw DivergenceError(static_cast<std::size_t>(t), std::nan(""));
    Vec mean = sum[t] / double(n);
    Mat cov = (sumsq[t] - double(n) * (mean * mean.transpose())) / double(n - 1);
    result.traces[t] = cov.trace();
    // Gaussian approximation: Var(Tr S) = 2 Tr(Sigma^2) / (n - 1).
    result.stderrs[t] = std::sqrt(2.0 * (cov * cov).trace() / double(n - 1));
  }
  return result;
}

std::optional<std::size_t> crossing_step(const std::vector<double>& traces, double psi) {
  if (!std::isfinite(psi)) throw ValidationError("crossing_step: psi must be finite");
  for (std::size_t i = 0; i < traces.size(); ++i)
    if (traces[i] >= psi) return i;
  return std::nullopt;
}

}  // namespace halo
