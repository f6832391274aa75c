#include "halo/types.hpp"

#include "halo/errors.hpp"

namespace halo {

const char* to_string(StepEvent e) {
  switch (e) {
    case StepEvent::kStep: return "step";
    case StepEvent::kReset: return "reset";
    case StepEvent::kTerminate: return "terminate";
  }
  return "step";
}

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kRunning: return "running";
    case RunStatus::kFinished: return "finished";
    case RunStatus::kHardLimit: return "terminated_hard_limit";
    case RunStatus::kOscillation: return "terminated_oscillation";
    case RunStatus::kTransportError: return "transport_error";
  }
  return "running";
}

StepEvent step_event_from_string(const std::string& s) {
  if (s == "step") return StepEvent::kStep;
  if (s == "reset") return StepEvent::kReset;
  if (s == "terminate") return StepEvent::kTerminate;
  throw ValidationError("unknown step event '" + s + "'");
}

RunStatus run_status_from_string(const std::string& s) {
  if (s == "running") return RunStatus::kRunning;
  if (s == "finished") return RunStatus::kFinished;
  if (s == "terminated_hard_limit") return RunStatus::kHardLimit;
  if (s == "terminated_oscillation") return RunStatus::kOscillation;
  if (s == "transport_error") return RunStatus::kTransportError;
  throw ValidationError("unknown run status '" + s + "'");
}

double Trajectory::delta_norm(std::size_t t) const {
  if (t >= states.size() || t >= ideal_states.size())
    throw ValidationError("delta_norm: step index out of range");
  return (states[t] - ideal_states[t]).norm();
}

void Trajectory::validate() const {
  // External runs carry no state vectors (d == 0, empty paths); statistics and
  // event bookkeeping still apply.  Simulated runs must keep both paths aligned.
  const bool external = d == 0 && states.empty() && ideal_states.empty();
  if (!external) {
    if (d <= 0) throw ValidationError("Trajectory: d must be positive");
    if (states.empty()) throw ValidationError("Trajectory: missing initial state");
    if (states.size() != ideal_states.size())
      throw ValidationError("Trajectory: states/ideal_states misaligned");
    if (per_step.size() + 1 != states.size())
      throw ValidationError("Trajectory: per_step must have one record per executed step");
    for (const auto& s : states)
      if (s.size() != d) throw ValidationError("Trajectory: state dimension mismatch");
  }
  int resets_seen = 0;
  int dyn = 0;
  int last_reset_step = 0;
  for (std::size_t i = 0; i < per_step.size(); ++i) {
    if (per_step[i].event == StepEvent::kReset) ++resets_seen;
    else if (per_step[i].event == StepEvent::kStep) ++dyn;
  }
  if (resets_seen != static_cast<int>(resets.size()))
    throw ValidationError("Trajectory: reset records and reset events disagree");
  if (dyn != dynamics_steps)
    throw ValidationError("Trajectory: dynamics_steps does not match step events");
  for (const auto& r : resets) {
    if (r.step <= last_reset_step)
      throw ValidationError("Trajectory: reset steps must be strictly increasing");
    last_reset_step = r.step;
    if (r.step < 1 || static_cast<std::size_t>(r.step) > per_step.size())
      throw ValidationError("Trajectory: reset step out of range");
    if (per_step[r.step - 1].event != StepEvent::kReset)
      throw ValidationError("Trajectory: reset record does not point at a reset event");
  }
}

}  // namespace halo
