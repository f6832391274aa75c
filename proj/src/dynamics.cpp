#include "halo/dynamics.hpp"

#include <cmath>

#include "halo/errors.hpp"

namespace halo {

void NoiseModel::validate() const {
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2))
    throw ValidationError("NoiseModel: sigma2 must be finite and >= 0");
}

NoiseStream::NoiseStream(const NoiseModel& model, std::uint64_t stream_id)
    : rng_(Rng::derive(model.seed, stream_id)), sigma2_(model.sigma2), stddev_(0.0) {
  model.validate();
  stddev_ = std::sqrt(model.sigma2);
}

Vec NoiseStream::draw(int d) {
  if (d < 1) throw ValidationError("NoiseStream::draw: d must be >= 1");
  Vec xi(d);
  for (int i = 0; i < d; ++i) xi[i] = stddev_ * rng_.next_gaussian();
  return xi;
}

Vec step(const TransitionMap& map, const Vec& state, NoiseStream& noise, long t) {
  Vec next = state + map.evaluate(state, t) + noise.draw(map.dim());
  if (!next.allFinite())
    throw DivergenceError(static_cast<std::size_t>(t < 0 ? 0 : t), state.norm());
  return next;
}

Trajectory simulate_open_loop(const TransitionMap& map, const Vec& s0, const NoiseModel& noise,
                              int n_steps) {
  if (n_steps < 0) throw ValidationError("simulate_open_loop: n_steps must be >= 0");
  if (s0.size() != map.dim()) throw ValidationError("simulate_open_loop: s0 dimension mismatch");
  if (!s0.allFinite()) throw ValidationError("simulate_open_loop: s0 must be finite");

  Trajectory traj;
  traj.d = map.dim();
  traj.dynamics_seed = Rng::derive(noise.seed, kStreamDynamics);
  traj.observation_seed = Rng::derive(noise.seed, kStreamObservation);
  traj.states.reserve(n_steps + 1);
  traj.ideal_states.reserve(n_steps + 1);
  traj.per_step.reserve(n_steps);
  traj.states.push_back(s0);
  traj.ideal_states.push_back(s0);

  NoiseStream stream(noise, kStreamDynamics);
  Vec s = s0;
  Vec ideal = s0;
  for (int t = 0; t < n_steps; ++t) {
    s = step(map, s, stream, t);
    ideal = ideal + map.evaluate(ideal, t);
    if (!ideal.allFinite()) throw DivergenceError(static_cast<std::size_t>(t), traj.delta_norm(t));
    traj.states.push_back(s);
    traj.ideal_states.push_back(ideal);
    traj.per_step.push_back(StepRecord{0.0, 0.0, 0.0, StepEvent::kStep});
  }
  traj.dynamics_steps = n_steps;
  traj.status = RunStatus::kFinished;
  return traj;
}

Mat jacobian_fd(const TransitionMap& map, const Vec& state, double h, long t) {
  if (!(h > 0.0)) throw ValidationError("jacobian_fd: h must be > 0");
  if (state.size() != map.dim()) throw ValidationError("jacobian_fd: state dimension mismatch");
  const int d = map.dim();
  Mat j(d, d);
  Vec probe = state;
  for (int c = 0; c < d; ++c) {
    probe[c] = state[c] + h;
    Vec hi = map.evaluate(probe, t);
    probe[c] = state[c] - h;
    Vec lo = map.evaluate(probe, t);
    probe[c] = state[c];
    j.col(c) = (hi - lo) / (2.0 * h);
  }
  return j;
}

SpectralNormResult spectral_norm(const Mat& m, int max_iters, double tol) {
  if (m.rows() < 1 || m.cols() < 1) throw ValidationError("spectral_norm: empty matrix");
  if (max_iters < 1) throw ValidationError("spectral_norm: max_iters must be >= 1");
  const int n = static_cast<int>(m.cols());

  // Deterministic, generic start direction: a tilted ones vector cannot be
  // orthogonal to the top singular subspace for any of the matrices we care
  // about, and keeps results reproducible without an RNG.
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * static_cast<double>(i);
  v.normalize();

  SpectralNormResult result;
  double prev = 0.0;
  for (int it = 1; it <= max_iters; ++it) {
    Vec mv = m * v;
    double sigma = mv.norm();  // = sqrt(v^T M^T M v), a lower bound on ||M||_2
    result.iterations = it;
    if (sigma == 0.0) {
      // v is in the null space; for a genuinely zero matrix that IS the norm.
      // A tilted restart distinguishes the two cases.
      if (m.norm() == 0.0) {
        result.value = 0.0;
        result.converged = true;
        return result;
      }
      for (int i = 0; i < n; ++i) v[i] = (i % 2 == 0) ? 1.0 : -0.5;
      v.normalize();
      continue;
    }
    Vec w = m.transpose() * mv;  // one power-iteration step on M^T M
    double wn = w.norm();
    if (wn == 0.0) {
      result.value = sigma;
      result.converged = true;
      return result;
    }
    v = w / wn;
    result.value = sigma;
    if (it > 1 && std::abs(sigma - prev) <= tol * std::max(1.0, std::abs(sigma))) {
      result.converged = true;
      return result;
    }
    prev = sigma;
  }
  result.converged = false;
  return result;
}

double lyapunov_estimate(const TransitionMap& map, const Vec& s0, const NoiseModel& noise,
                         int n_steps) {
  if (n_steps < 10) throw ValidationError("lyapunov_estimate: n_steps must be >= 10");
  if (s0.size() != map.dim()) throw ValidationError("lyapunov_estimate: s0 dimension mismatch");
  const int d = map.dim();

  // Seeded start tangent; generic direction avoids pathological alignment.
  Rng rng(Rng::derive(noise.seed, kStreamTangent));
  Vec u(d);
  for (int i = 0; i < d; ++i) u[i] = rng.next_gaussian();
  if (u.norm() == 0.0) u = Vec::Ones(d);
  u.normalize();

  NoiseStream stream(noise, kStreamDynamics);
  Vec s = s0;
  double acc = 0.0;
  const Mat eye = Mat::Identity(d, d);
  for (int t = 0; t < n_steps; ++t) {
    Mat a = eye + map.jacobian(s, t);
    Vec v = a * u;
    double growth = v.norm();
    if (growth == 0.0) throw DegenerateDirectionError(static_cast<std::size_t>(t));
    acc += std::log(growth);
    u = v / growth;
    s = step(map, s, stream, t);
  }
  return acc / static_cast<double>(n_steps);
}

}  // namespace halo
