#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace halo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// The latent state is a plain dense vector of fixed dimension d >= 1.
using StateVector = Vec;

// What happened at a given loop iteration of a run.
enum class StepEvent {
  kStep,       // a dynamics step was executed
  kReset,      // the controller rectified instead of stepping
  kTerminate,  // external generator reported completion at this observation
};

// Why a run stopped.
enum class RunStatus {
  kRunning,
  kFinished,              // reached its step horizon / generator finished
  kHardLimit,             // iteration ceiling hit before finishing
  kOscillation,           // repeated resets without progress
  kTransportError,        // external adapter failed mid-run (partial data)
};

const char* to_string(StepEvent e);
const char* to_string(RunStatus s);
StepEvent step_event_from_string(const std::string& s);
RunStatus run_status_from_string(const std::string& s);

// Per-iteration observables. `drift` is the observer's local drift estimate,
// `omega` the accumulated uncertainty after this iteration's update (0 right
// after a reset).
struct StepRecord {
  double entropy = 0.0;
  double drift = 0.0;
  double omega = 0.0;
  StepEvent event = StepEvent::kStep;
};

// A rectification event. In simulation mode the anchor is the post-reset
// state; in external mode it is the generator's compressed summary string.
struct ResetInfo {
  int step = 0;               // 1-based loop iteration at which the reset fired
  Vec anchor;                 // simulation mode (size 0 when external)
  std::string summary;        // external mode
};

// Full record of one run. `states`/`ideal_states` are index-aligned:
// states[0] == ideal_states[0] == s0, and entry t is the pair after iteration
// t. On a reset iteration the noisy state is replaced by the rectified anchor
// while the ideal state is carried over unchanged, so delta(t) =
// states[t] - ideal_states[t] stays well defined for every t.
struct Trajectory {
  int d = 0;
  std::uint64_t dynamics_seed = 0;
  std::uint64_t observation_seed = 0;
  std::vector<Vec> states;
  std::vector<Vec> ideal_states;
  std::vector<StepRecord> per_step;   // one entry per executed loop iteration
  std::vector<ResetInfo> resets;
  RunStatus status = RunStatus::kFinished;
  int dynamics_steps = 0;             // iterations that advanced the dynamics

  // ||states[t] - ideal_states[t]||_2. Requires aligned histories.
  double delta_norm(std::size_t t) const;
  // Internal-consistency checks (alignment, event bookkeeping). Throws
  // ValidationError on violation; cheap enough to call in tests everywhere.
  void validate() const;
};

}  // namespace halo
