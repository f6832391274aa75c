#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "halo/controller.hpp"
#include "halo/horizon.hpp"
#include "halo/observer.hpp"
#include "halo/types.hpp"

namespace halo {

inline constexpr int kConfigVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

enum class Scenario { kOpenLoop, kHalo, kPhaseSweep, kSensitivity, kCalibration, kCorrelation };

const char* to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

// Fully resolved experiment description. parse_experiment_config() fills every
// field (applying the documented derivations for the 0/absent sentinels) and
// rejects unknown keys with their full path.
struct ExperimentConfig {
  Scenario scenario = Scenario::kOpenLoop;
  std::uint64_t seed = 42;
  int jobs = 1;

  // system
  std::string family = "linear_isotropic";  // linear_isotropic | linear_rotation |
                                            // tanh_net | switched_isotropic
  int d = 4;
  double lambda = 0.1;       // drift exponent of linear families (rho = e^lambda)
  double lipschitz = 1.0;    // tanh_net
  std::vector<double> rhos;  // switched_isotropic
  int period = 1;            // switched_isotropic
  double sigma2 = 0.01;

  // observer
  ObserverCalibration calibration;  // alpha/beta used in the loop
  double obs_noise = 0.0;
  int context_len = 64;
  int layers = 2;
  int heads = 2;

  // controller
  double psi = 0.0;  // 0 => matched budget (0.8 * lambda * N*); may be +inf
  double epsilon = 0.0;
  bool floor_at_zero = true;
  int osc_window = 3;
  double progress_tol = 1e-6;
  int max_steps = 0;  // 0 => ceil(1.25 * horizon_steps)

  // run
  int n_seeds = 500;
  int horizon_steps = 0;  // 0 => round(4 * N*) for linear families
  double success_tol = 0.6728;  // per coordinate; success band = tol * sqrt(d)

  // phase_sweep
  std::vector<int> sweep_lengths;     // empty => derived around N* per difficulty
  std::vector<double> sweep_lambdas;  // empty => log-spaced [0.02, 0.3], 6 rows

  // sensitivity
  std::vector<double> psi_factors = {0.25, 1.0, 4.0};

  // calibration
  int cal_n_samples = 2000;
  double cal_boundary = 2.9412;
  double cal_label_noise = 0.05;
  double cal_entropy_lo = 0.0;  // 0/0 => boundary +/- 2
  double cal_entropy_hi = 0.0;
  double cal_l2 = 1e-3;
  double cal_reference_slope = 0.0;
  std::string cal_input_csv;  // when set, load samples instead of generating

  // correlation
  std::string correlation_mode = "halo";  // halo | open_loop

  // resolved quantities (filled by resolve())
  double n_star = 0.0;

  void validate() const;
};

// Parse + strictly validate + resolve derived defaults. Errors carry the
// offending field path, e.g. "config.controller.psi: must be > 0 or \"inf\"".
ExperimentConfig parse_experiment_config(const std::string& json_text);
// Inverse: canonical JSON for a config (parse(write(c)) == c field-for-field).
std::string experiment_config_to_json(const ExperimentConfig& config);
// The shipped defaults for a scenario (also what the CLI uses without --config).
ExperimentConfig default_config(Scenario scenario);

struct SeedRecord {
  std::uint64_t seed = 0;
  int steps = 0;           // loop iterations (dynamics + resets)
  int dynamics_steps = 0;
  int resets = 0;
  int resets_ok = 0;       // resets whose post-window stayed inside the band
  double final_delta = 0.0;
  bool success = false;
  std::string status;
  double pearson_r = std::numeric_limits<double>::quiet_NaN();   // NaN = not applicable
  double lead_time = std::numeric_limits<double>::quiet_NaN();
};

struct Aggregates {
  std::optional<double> success_rate;
  std::optional<double> rectification_success_rate;
  std::optional<double> relative_step_overhead;
  std::optional<double> mean_resets;
  std::optional<double> pearson_r;
};

struct ExperimentResult {
  std::string tool_version = kToolVersion;
  double wall_time_sec = 0.0;
  ExperimentConfig config;
  std::vector<SeedRecord> per_seed;
  Aggregates aggregates;
  // Scenario payloads not expressible per-seed (phase grid, sensitivity
  // table, calibration artifact), serialized under "extra".
  std::string extra_json = "{}";
};

// Recompute the aggregate block from the per-seed records; run_experiment's
// output must equal this (tested). horizon_steps is needed to interpret
// relative overhead for runs without a matched open arm.
Aggregates aggregates_from_records(const std::vector<SeedRecord>& per_seed, int horizon_steps);

ExperimentResult run_experiment(const ExperimentConfig& config);

// Total closed-loop iterations over total open-loop steps for matched runs.
double relative_step_overhead(const ExperimentResult& closed, const ExperimentResult& open);

// Fraction of resets (across all records) whose window stayed in band.
std::optional<double> rectification_success_rate(const std::vector<SeedRecord>& per_seed);

// Pearson correlation; nullopt when either series is degenerate (constant) or
// lengths differ / are < 2.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

struct RunCorrelation {
  std::optional<double> r;          // omega_t vs ||delta_t||
  std::optional<double> lead_time;  // first band breach minus first boundary breach
};

// Per-run diagnostics behind the correlation scenario: correlates the omega
// series against ||delta_t||, and measures how far entropy's first crossing
// of the calibration boundary leads ||delta||'s first crossing of the band.
RunCorrelation correlation_for_run(const Trajectory& traj, double boundary, double band);

// Matched-seed two-arm comparison (same dynamics noise per seed).
struct CompareResult {
  ExperimentResult open;
  ExperimentResult halo;
  double overhead = 0.0;      // closed iterations / open steps
  double success_gap = 0.0;   // halo success rate - open success rate
};
CompareResult compare_open_vs_halo(const ExperimentConfig& config);

// Serialization of results (JSON always; per-seed CSV for format=csv).
std::string experiment_result_to_json(const ExperimentResult& result);
ExperimentResult experiment_result_from_json(const std::string& text);
std::string per_seed_csv(const ExperimentResult& result);
std::string compare_csv(const CompareResult& result);

}  // namespace halo
