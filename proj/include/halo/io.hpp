#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "halo/error_prop.hpp"
#include "halo/horizon.hpp"
#include "halo/observer.hpp"
#include "halo/types.hpp"

namespace halo {

// Interchange form of a trajectory (exactly what goes on the wire/disk):
//   {"d": int, "seeds": [dynamics, observation],
//    "steps": [{"state": [...], "entropy": f, "drift": f, "omega": f,
//               "event": "step"|"reset"|"terminate"}, ...]}
// steps[t] is the record of executed iteration t+1 and carries the
// post-iteration state ([] for external runs, which track no state vectors).
// The initial state and the ideal path are not part of the document.
struct TrajectoryDoc {
  int d = 0;
  std::uint64_t dynamics_seed = 0;
  std::uint64_t observation_seed = 0;
  struct Step {
    std::vector<double> state;
    double entropy = 0.0;
    double drift = 0.0;
    double omega = 0.0;
    StepEvent event = StepEvent::kStep;
  };
  std::vector<Step> steps;
};

TrajectoryDoc to_doc(const Trajectory& traj);
std::string trajectory_to_json(const Trajectory& traj);       // compact, deterministic
std::string trajectory_doc_to_json(const TrajectoryDoc& doc);
TrajectoryDoc trajectory_doc_from_json(const std::string& text);

// CSV, one row per executed step:
//   step,event,entropy,drift,omega,state_0,...,state_{d-1}
std::string trajectory_to_csv(const Trajectory& traj);

// Phase grid CSV: length,difficulty,success_rate,n_seeds,diverged (one row
// per cell, row-major over difficulties then lengths).
std::string phase_grid_to_csv(const PhaseGrid& grid);
// Companion curve with the matched-threshold prediction per difficulty row:
//   difficulty,n_star
std::string horizon_curve_to_csv(const PhaseGrid& grid);

// Analytic-vs-empirical trace table: step,analytic_trace,empirical_trace,stderr.
std::string trace_table_to_csv(const std::vector<double>& analytic, const EmpiricalTrace& emp);

// Calibration artifact:
//   {"alpha": f, "beta": f,
//    "fit": {"n_samples": i, "log_loss": f, "boundary_entropy": f, "w": f, "b": f}}
std::string calibration_to_json(const CalibratedObserver& cal);
CalibratedObserver calibration_from_json(const std::string& text);

// Labeled drift samples: header "entropy,label", label in {stable, unstable}.
std::string drift_samples_to_csv(const std::vector<DriftSample>& samples);
std::vector<DriftSample> drift_samples_from_csv(const std::string& text);

// Full-precision, locale-independent float formatting used by every CSV
// writer (%.17g round-trips doubles exactly).
std::string format_double(double v);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace halo
