#pragma once

#include <string>
#include <vector>

#include "halo/dynamics.hpp"
#include "halo/observer.hpp"
#include "halo/types.hpp"

namespace halo {

// When to intervene and how long to keep trying.
struct ControllerConfig {
  double psi = 5.0;           // uncertainty budget; may be +infinity (never intervene)
  bool floor_at_zero = true;  // clamp the accumulator at 0 from below
  int osc_window = 3;         // consecutive no-progress resets that end the run
  double progress_tol = 1e-6; // minimum anchor displacement that counts as progress
  int max_steps = 200;        // hard ceiling on loop iterations (steps + resets)

  void validate() const;
};

// How to rectify. epsilon is the residual error retained by a reset
// (S <- S* + epsilon * delta); template_text is the opaque prompt payload
// forwarded to external generators in the rectify message.
struct RectifierSpec {
  double epsilon = 0.0;
  std::string template_text;

  void validate() const;
};

enum class Regime { kStable, kCritical };

// Running controller bookkeeping.
struct ControllerState {
  double omega = 0.0;
  int step = 0;  // loop iterations executed so far
  std::vector<ResetInfo> resets;
  RunStatus status = RunStatus::kRunning;
};

// Accumulate one drift estimate: omega + drift, floored at 0 when configured.
double update_uncertainty(double omega, double drift, const ControllerConfig& cfg);

// Switching law: critical iff omega >= psi (inclusive).
Regime check_stability(double omega, double psi);

// Applies the rectification S <- S*_t + epsilon * (S_t - S*_t) to the latest
// point of `traj` and returns the anchor state plus the controller state with
// omega zeroed and the reset appended. Does not modify its inputs.
std::pair<Vec, ControllerState> rectify(const Trajectory& traj, const RectifierSpec& spec,
                                        const ControllerState& state);

// True iff at least osc_window resets exist and the last osc_window of them
// show pairwise-consecutive anchor displacement below progress_tol.
// Vector anchors compare by Euclidean distance; summary-string anchors count
// as zero displacement only when exactly equal.
bool detect_oscillation(const ControllerState& state, const ControllerConfig& cfg);

// Observation / loop parameters that are not controller policy.
struct HaloRunOptions {
  int horizon_steps = 0;  // dynamics steps to execute; 0 means cfg.max_steps
  double obs_noise = 0.0;
  int context_len = 64;
  int layers = 2;
  int heads = 2;
};

// Closed loop over a simulated system. Each iteration: synthesize an
// attention frame at the system's current local expansion rate, observe mean
// entropy, estimate drift, accumulate omega; if omega >= psi rectify
// (event=reset, no dynamics step, ideal path holds still), else execute one
// dynamics step. Dynamics noise and observation noise come from independent
// substreams of noise.seed, so psi = +infinity reproduces
// simulate_open_loop's states exactly, byte for byte.
// Terminates: horizon reached (finished), iteration ceiling
// (terminated_hard_limit), or osc_window no-progress resets
// (terminated_oscillation).
Trajectory run_halo(const TransitionMap& map, const Vec& s0, const NoiseModel& noise,
                    const ObserverCalibration& cal, const ControllerConfig& cfg,
                    const RectifierSpec& rect, const HaloRunOptions& opts = {});

}  // namespace halo
