#include "halo/controller.hpp"

#include <cmath>
#include <limits>

#include "halo/errors.hpp"

namespace halo {

void ControllerConfig::validate() const {
  if (!(psi > 0.0)) throw ValidationError("ControllerConfig: psi must be > 0");
  if (osc_window < 2) throw ValidationError("ControllerConfig: osc_window must be >= 2");
  if (!(progress_tol >= 0.0) || !std::isfinite(progress_tol))
    throw ValidationError("ControllerConfig: progress_tol must be finite and >= 0");
  if (max_steps < 1) throw ValidationError("ControllerConfig: max_steps must be >= 1");
}

void RectifierSpec::validate() const {
  if (!std::isfinite(epsilon) || epsilon < 0.0 || epsilon > 1.0)
    throw ValidationError("RectifierSpec: epsilon must be in [0, 1]");
}

double update_uncertainty(double omega, double drift, const ControllerConfig& cfg) {
  if (!std::isfinite(omega) || !std::isfinite(drift))
    throw ValidationError("update_uncertainty: omega and drift must be finite");
  const double next = omega + drift;
  return cfg.floor_at_zero ? std::max(0.0, next) : next;
}

Regime check_stability(double omega, double psi) {
  if (!(psi > 0.0)) throw ValidationError("check_stability: psi must be > 0");
  if (!std::isfinite(omega)) throw ValidationError("check_stability: omega must be finite");
  return omega >= psi ? Regime::kCritical : Regime::kStable;
}

std::pair<Vec, ControllerState> rectify(const Trajectory& traj, const RectifierSpec& spec,
                                        const ControllerState& state) {
  spec.validate();
  if (traj.states.empty() || traj.ideal_states.empty())
    throw ValidationError("rectify: trajectory has no states to rectify");
  const Vec& current = traj.states.back();
  const Vec& ideal = traj.ideal_states.back();
  Vec anchor = ideal + spec.epsilon * (current - ideal);

  ControllerState next = state;
  next.omega = 0.0;  // unconditional, regardless of epsilon
  ResetInfo info;
  info.step = state.step;
  info.anchor = anchor;
  next.resets.push_back(std::move(info));
  return {std::move(anchor), std::move(next)};
}

namespace {

// Displacement between consecutive anchors; +inf when incomparable.
double anchor_displacement(const ResetInfo& a, const ResetInfo& b) {
  if (a.anchor.size() > 0 && b.anchor.size() > 0 && a.anchor.size() == b.anchor.size())
    return (a.anchor - b.anchor).norm();
  if (a.anchor.size() == 0 && b.anchor.size() == 0)
    return a.summary == b.summary ? 0.0 : std::numeric_limits<double>::infinity();
  return std::numeric_limits<double>::infinity();
}

}  // namespace

bool detect_oscillation(const ControllerState& state, const ControllerConfig& cfg) {
  cfg.validate();
  const std::size_t w = static_cast<std::size_t>(cfg.osc_window);
  if (state.resets.size() < w) return false;
  const std::size_t first = state.resets.size() - w;
  for (std::size_t i = first; i + 1 < state.resets.size(); ++i) {
    if (anchor_displacement(state.resets[i], state.resets[i + 1]) >= cfg.progress_tol)
      return false;
  }
  return true;
}

Trajectory run_halo(const TransitionMap& map, const Vec& s0, const NoiseModel& noise,
                    const ObserverCalibration& cal, const ControllerConfig& cfg,
                    const RectifierSpec& rect, const HaloRunOptions& opts) {
  cfg.validate();
  rect.validate();
  cal.validate();
  if (s0.size() != map.dim()) throw ValidationError("run_halo: s0 dimension mismatch");
  if (!s0.allFinite()) throw ValidationError("run_halo: s0 must be finite");
  const int horizon = opts.horizon_steps > 0 ? opts.horizon_steps : cfg.max_steps;
  const int d = map.dim();

  Trajectory traj;
  traj.d = d;
  traj.dynamics_seed = Rng::derive(noise.seed, kStreamDynamics);
  traj.observation_seed = Rng::derive(noise.seed, kStreamObservation);
  traj.states.push_back(s0);
  traj.ideal_states.push_back(s0);

  NoiseStream dyn(noise, kStreamDynamics);
  Rng obs_rng(traj.observation_seed);
  ControllerState ctl;
  const Mat eye = Mat::Identity(d, d);

  for (;;) {
    if (traj.dynamics_steps >= horizon) {
      traj.status = RunStatus::kFinished;
      break;
    }
    if (ctl.step >= cfg.max_steps) {
      traj.status = RunStatus::kHardLimit;
      break;
    }
    ctl.step += 1;
    const long t = traj.dynamics_steps;  // schedule time: resets do not advance it

    // Observe: the system's instantaneous expansion rate drives the frame.
    const Vec& s = traj.states.back();
    const double mu = spectral_norm(eye + map.jacobian(s, t)).value;
    const double lam_true = std::log(mu);
    AttentionFrame frame =
        synth_attention(lam_true, cal, opts.obs_noise, obs_rng, opts.context_len, opts.layers,
                        opts.heads);
    const double hbar = mean_attention_entropy(frame);
    const double lam_hat = drift_proxy(hbar, cal);
    ctl.omega = update_uncertainty(ctl.omega, lam_hat, cfg);

    if (check_stability(ctl.omega, cfg.psi) == Regime::kCritical) {
      auto [anchor, next_ctl] = rectify(traj, rect, ctl);
      ctl = std::move(next_ctl);
      traj.states.push_back(std::move(anchor));
      traj.ideal_states.push_back(traj.ideal_states.back());  // ideal path holds
      traj.per_step.push_back(StepRecord{hbar, lam_hat, ctl.omega, StepEvent::kReset});
      traj.resets.push_back(ctl.resets.back());
      if (detect_oscillation(ctl, cfg)) {
        traj.status = RunStatus::kOscillation;
        break;
      }
    } else {
      Vec s_next = step(map, s, dyn, t);
      Vec ideal_next = traj.ideal_states.back() + map.evaluate(traj.ideal_states.back(), t);
      if (!ideal_next.allFinite())
        throw DivergenceError(static_cast<std::size_t>(t), traj.ideal_states.back().norm());
      traj.states.push_back(std::move(s_next));
      traj.ideal_states.push_back(std::move(ideal_next));
      traj.per_step.push_back(StepRecord{hbar, lam_hat, ctl.omega, StepEvent::kStep});
      traj.dynamics_steps += 1;
    }
  }
  return traj;
}

}  // namespace halo
