#include "halo/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "halo/error_prop.hpp"
#include "halo/errors.hpp"
#include "halo/io.hpp"
#include "halo/parallel.hpp"
#include "halo/rng.hpp"

namespace halo {

using nlohmann::json;

namespace {

constexpr std::uint64_t kMapSeedStream = 0x4D415053ULL;    // system construction
constexpr std::uint64_t kSeedBlock = 0x5EED0000ULL;        // per-run noise seeds
constexpr std::uint64_t kCalSeedStream = 0xCA11B007ULL;    // calibration sampling

std::uint64_t run_noise_seed(std::uint64_t base, int i) {
  return Rng::derive(base, kSeedBlock + static_cast<std::uint64_t>(i));
}

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::kOpenLoop: return "open_loop";
    case Scenario::kHalo: return "halo";
    case Scenario::kPhaseSweep: return "phase_sweep";
    case Scenario::kSensitivity: return "sensitivity";
    case Scenario::kCalibration: return "calibration";
    case Scenario::kCorrelation: return "correlation";
  }
  return "open_loop";
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "open_loop") return Scenario::kOpenLoop;
  if (s == "halo") return Scenario::kHalo;
  if (s == "phase_sweep") return Scenario::kPhaseSweep;
  if (s == "sensitivity") return Scenario::kSensitivity;
  if (s == "calibration") return Scenario::kCalibration;
  if (s == "correlation") return Scenario::kCorrelation;
  throw ValidationError("config.scenario: unknown scenario '" + s + "'");
}

// ---------------------------------------------------------------------------
// config parsing

namespace {

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        ok = true;
        break;
      }
    if (!ok) throw ValidationError(path + ": unknown key '" + item.key() + "'");
  }
}

double get_number(const json& j, const std::string& path, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ValidationError(path + "." + key + ": must be a number");
  return j[key].get<double>();
}

int get_int(const json& j, const std::string& path, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer())
    throw ValidationError(path + "." + key + ": must be an integer");
  return j[key].get<int>();
}

bool get_bool(const json& j, const std::string& path, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) throw ValidationError(path + "." + key + ": must be a boolean");
  return j[key].get<bool>();
}

std::string get_string(const json& j, const std::string& path, const char* key,
                       const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) throw ValidationError(path + "." + key + ": must be a string");
  return j[key].get<std::string>();
}

// psi accepts a positive number or the string "inf".
double get_psi(const json& j, const std::string& path, double fallback) {
  if (!j.contains("psi")) return fallback;
  const json& v = j["psi"];
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    throw ValidationError(path + ".psi: the only string form is \"inf\"");
  }
  if (!v.is_number()) throw ValidationError(path + ".psi: must be a number or \"inf\"");
  return v.get<double>();
}

bool is_linear_family(const std::string& family) {
  return family == "linear_isotropic" || family == "linear_rotation";
}

// Fill derived quantities; validate everything a scenario will touch.
void resolve(ExperimentConfig& c) {
  if (c.d < 1) throw ValidationError("config.system.d: must be >= 1");
  if (!(c.sigma2 >= 0.0)) throw ValidationError("config.system.sigma2: must be >= 0");
  if (c.family != "linear_isotropic" && c.family != "linear_rotation" &&
      c.family != "tanh_net" && c.family != "switched_isotropic")
    throw ValidationError("config.system.family: unknown family '" + c.family + "'");
  if (c.family == "switched_isotropic" && c.rhos.empty())
    throw ValidationError("config.system.rhos: required for switched_isotropic");
  if (c.n_seeds < 1) throw ValidationError("config.run.n_seeds: must be >= 1");
  if (!(c.success_tol > 0.0)) throw ValidationError("config.run.success_tol: must be > 0");
  if (c.jobs < 0) throw ValidationError("config.jobs: must be >= 0 (0 = hardware)");
  c.calibration.validate();
  if (!(c.obs_noise >= 0.0)) throw ValidationError("config.observer.obs_noise: must be >= 0");
  if (c.context_len < 2) throw ValidationError("config.observer.context_len: must be >= 2");
  if (c.layers < 1 || c.heads < 1)
    throw ValidationError("config.observer.layers/heads: must be >= 1");

  const bool linear = is_linear_family(c.family);
  if (linear && c.sigma2 > 0.0)
    c.n_star = critical_horizon({c.lambda, c.sigma2, matched_psi(c.success_tol)});

  const bool needs_horizon = c.scenario != Scenario::kPhaseSweep &&
                             c.scenario != Scenario::kCalibration;
  if (needs_horizon && c.horizon_steps == 0) {
    if (!linear || c.n_star <= 0.0)
      throw ValidationError(
          "config.run.horizon_steps: required (no derived horizon for this system)");
    c.horizon_steps = std::max(1, static_cast<int>(std::lround(4.0 * c.n_star)));
  }
  if (needs_horizon && c.horizon_steps < 1)
    throw ValidationError("config.run.horizon_steps: must be >= 1");

  const bool needs_controller =
      c.scenario == Scenario::kHalo || c.scenario == Scenario::kSensitivity ||
      (c.scenario == Scenario::kCorrelation && c.correlation_mode == "halo");
  if (needs_controller && c.psi == 0.0) {
    if (!linear || c.n_star <= 0.0)
      throw ValidationError("config.controller.psi: required (no matched budget derivable)");
    c.psi = 0.8 * c.lambda * c.n_star;
  }
  if (needs_controller && !(c.psi > 0.0))
    throw ValidationError("config.controller.psi: must be > 0 or \"inf\"");
  if (c.scenario == Scenario::kCorrelation && c.correlation_mode == "open_loop")
    c.psi = std::numeric_limits<double>::infinity();

  if (c.max_steps == 0 && c.horizon_steps > 0)
    c.max_steps = static_cast<int>(std::ceil(1.25 * c.horizon_steps));
  if (needs_horizon && c.max_steps < c.horizon_steps)
    throw ValidationError("config.controller.max_steps: must be >= run.horizon_steps");

  if (!(c.epsilon >= 0.0 && c.epsilon <= 1.0))
    throw ValidationError("config.controller.epsilon: must be in [0, 1]");
  if (c.osc_window < 2) throw ValidationError("config.controller.osc_window: must be >= 2");
  if (!(c.progress_tol >= 0.0))
    throw ValidationError("config.controller.progress_tol: must be >= 0");

  if (c.scenario == Scenario::kPhaseSweep) {
    if (c.sweep_lambdas.empty()) {
      // log-spaced difficulty rows in [0.02, 0.3]
      const int rows = 6;
      for (int i = 0; i < rows; ++i) {
        const double f = static_cast<double>(i) / (rows - 1);
        c.sweep_lambdas.push_back(0.02 * std::pow(0.3 / 0.02, f));
      }
    }
    for (double l : c.sweep_lambdas)
      if (!(l > 0.0)) throw ValidationError("config.sweep.lambdas: entries must be > 0");
    if (c.sweep_lengths.empty()) {
      // common length axis covering [N*/2, 2N*] across all difficulty rows
      int lo = std::numeric_limits<int>::max(), hi = 1;
      for (double l : c.sweep_lambdas) {
        const double ns = critical_horizon({l, c.sigma2, matched_psi(c.success_tol)});
        lo = std::min(lo, std::max(1, static_cast<int>(std::floor(ns / 2.0))));
        hi = std::max(hi, static_cast<int>(std::ceil(2.0 * ns)));
      }
      for (int n = lo; n <= hi; ++n) c.sweep_lengths.push_back(n);
    }
    for (int n : c.sweep_lengths)
      if (n < 1) throw ValidationError("config.sweep.lengths: entries must be >= 1");
  }

  if (c.scenario == Scenario::kSensitivity) {
    if (c.psi_factors.empty())
      throw ValidationError("config.sensitivity.psi_factors: must be non-empty");
    for (double f : c.psi_factors)
      if (!(f > 0.0)) throw ValidationError("config.sensitivity.psi_factors: must be > 0");
  }

  if (c.scenario == Scenario::kCalibration) {
    if (c.cal_n_samples < 10 && c.cal_input_csv.empty())
      throw ValidationError("config.calibration.n_samples: must be >= 10");
    if (!(c.cal_boundary > 0.0))
      throw ValidationError("config.calibration.boundary: must be > 0");
    if (!(c.cal_label_noise >= 0.0 && c.cal_label_noise < 0.5))
      throw ValidationError("config.calibration.label_noise: must be in [0, 0.5)");
    if (c.cal_entropy_lo == 0.0 && c.cal_entropy_hi == 0.0) {
      c.cal_entropy_lo = std::max(0.0, c.cal_boundary - 2.0);
      c.cal_entropy_hi = c.cal_boundary + 2.0;
    }
    if (!(c.cal_entropy_hi > c.cal_entropy_lo))
      throw ValidationError("config.calibration.entropy_hi: must exceed entropy_lo");
    if (!(c.cal_l2 >= 0.0)) throw ValidationError("config.calibration.l2: must be >= 0");
  }

  if (c.scenario == Scenario::kCorrelation && c.correlation_mode != "halo" &&
      c.correlation_mode != "open_loop")
    throw ValidationError("config.correlation.mode: must be 'halo' or 'open_loop'");
}

}  // namespace

void ExperimentConfig::validate() const {
  ExperimentConfig copy = *this;
  resolve(copy);
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json in = json::parse(json_text, nullptr, false);
  if (in.is_discarded() || !in.is_object())
    throw ValidationError("config: not a JSON object");
  check_keys(in, "config",
             {"version", "scenario", "seed", "jobs", "system", "observer", "controller", "run",
              "sweep", "sensitivity", "calibration", "correlation"});
  if (!in.contains("version") || !in["version"].is_number_integer())
    throw ValidationError("config.version: required integer");
  if (in["version"].get<int>() != kConfigVersion)
    throw ValidationError("config.version: unsupported version " +
                          std::to_string(in["version"].get<int>()) + " (expected " +
                          std::to_string(kConfigVersion) + ")");
  if (!in.contains("scenario") || !in["scenario"].is_string())
    throw ValidationError("config.scenario: required string");

  ExperimentConfig c;
  c.scenario = scenario_from_string(in["scenario"].get<std::string>());
  if (in.contains("seed")) {
    if (!in["seed"].is_number_unsigned() && !in["seed"].is_number_integer())
      throw ValidationError("config.seed: must be an integer");
    c.seed = in["seed"].get<std::uint64_t>();
  }
  c.jobs = get_int(in, "config", "jobs", 1);

  if (in.contains("system")) {
    const json& s = in["system"];
    if (!s.is_object()) throw ValidationError("config.system: must be an object");
    check_keys(s, "config.system", {"family", "d", "lambda", "lipschitz", "rhos", "period",
                                    "sigma2"});
    c.family = get_string(s, "config.system", "family", c.family);
    c.d = get_int(s, "config.system", "d", c.d);
    c.lambda = get_number(s, "config.system", "lambda", c.lambda);
    c.lipschitz = get_number(s, "config.system", "lipschitz", c.lipschitz);
    c.period = get_int(s, "config.system", "period", c.period);
    c.sigma2 = get_number(s, "config.system", "sigma2", c.sigma2);
    if (s.contains("rhos")) {
      if (!s["rhos"].is_array()) throw ValidationError("config.system.rhos: must be an array");
      c.rhos = s["rhos"].get<std::vector<double>>();
    }
  }
  if (in.contains("observer")) {
    const json& o = in["observer"];
    if (!o.is_object()) throw ValidationError("config.observer: must be an object");
    check_keys(o, "config.observer", {"alpha", "beta", "obs_noise", "context_len", "layers",
                                      "heads"});
    c.calibration.alpha = get_number(o, "config.observer", "alpha", c.calibration.alpha);
    c.calibration.beta = get_number(o, "config.observer", "beta", c.calibration.beta);
    c.obs_noise = get_number(o, "config.observer", "obs_noise", c.obs_noise);
    c.context_len = get_int(o, "config.observer", "context_len", c.context_len);
    c.layers = get_int(o, "config.observer", "layers", c.layers);
    c.heads = get_int(o, "config.observer", "heads", c.heads);
  }
  if (in.contains("controller")) {
    const json& k = in["controller"];
    if (!k.is_object()) throw ValidationError("config.controller: must be an object");
    check_keys(k, "config.controller",
               {"psi", "epsilon", "floor_at_zero", "osc_window", "progress_tol", "max_steps"});
    c.psi = get_psi(k, "config.controller", c.psi);
    c.epsilon = get_number(k, "config.controller", "epsilon", c.epsilon);
    c.floor_at_zero = get_bool(k, "config.controller", "floor_at_zero", c.floor_at_zero);
    c.osc_window = get_int(k, "config.controller", "osc_window", c.osc_window);
    c.progress_tol = get_number(k, "config.controller", "progress_tol", c.progress_tol);
    c.max_steps = get_int(k, "config.controller", "max_steps", c.max_steps);
  }
  if (in.contains("run")) {
    const json& r = in["run"];
    if (!r.is_object()) throw ValidationError("config.run: must be an object");
    check_keys(r, "config.run", {"n_seeds", "horizon_steps", "success_tol"});
    c.n_seeds = get_int(r, "config.run", "n_seeds", c.n_seeds);
    c.horizon_steps = get_int(r, "config.run", "horizon_steps", c.horizon_steps);
    c.success_tol = get_number(r, "config.run", "success_tol", c.success_tol);
  }
  if (in.contains("sweep")) {
    const json& w = in["sweep"];
    if (!w.is_object()) throw ValidationError("config.sweep: must be an object");
    check_keys(w, "config.sweep", {"lengths", "lambdas"});
    if (w.contains("lengths")) {
      if (!w["lengths"].is_array())
        throw ValidationError("config.sweep.lengths: must be an array");
      c.sweep_lengths = w["lengths"].get<std::vector<int>>();
    }
    if (w.contains("lambdas")) {
      if (!w["lambdas"].is_array())
        throw ValidationError("config.sweep.lambdas: must be an array");
      c.sweep_lambdas = w["lambdas"].get<std::vector<double>>();
    }
  }
  if (in.contains("sensitivity")) {
    const json& s = in["sensitivity"];
    if (!s.is_object()) throw ValidationError("config.sensitivity: must be an object");
    check_keys(s, "config.sensitivity", {"psi_factors"});
    if (s.contains("psi_factors")) {
      if (!s["psi_factors"].is_array())
        throw ValidationError("config.sensitivity.psi_factors: must be an array");
      c.psi_factors = s["psi_factors"].get<std::vector<double>>();
    }
  }
  if (in.contains("calibration")) {
    const json& k = in["calibration"];
    if (!k.is_object()) throw ValidationError("config.calibration: must be an object");
    check_keys(k, "config.calibration",
               {"n_samples", "boundary", "label_noise", "entropy_lo", "entropy_hi", "l2",
                "reference_slope", "input_csv"});
    c.cal_n_samples = get_int(k, "config.calibration", "n_samples", c.cal_n_samples);
    c.cal_boundary = get_number(k, "config.calibration", "boundary", c.cal_boundary);
    c.cal_label_noise = get_number(k, "config.calibration", "label_noise", c.cal_label_noise);
    c.cal_entropy_lo = get_number(k, "config.calibration", "entropy_lo", c.cal_entropy_lo);
    c.cal_entropy_hi = get_number(k, "config.calibration", "entropy_hi", c.cal_entropy_hi);
    c.cal_l2 = get_number(k, "config.calibration", "l2", c.cal_l2);
    c.cal_reference_slope =
        get_number(k, "config.calibration", "reference_slope", c.cal_reference_slope);
    c.cal_input_csv = get_string(k, "config.calibration", "input_csv", c.cal_input_csv);
  }
  if (in.contains("correlation")) {
    const json& k = in["correlation"];
    if (!k.is_object()) throw ValidationError("config.correlation: must be an object");
    check_keys(k, "config.correlation", {"mode"});
    c.correlation_mode = get_string(k, "config.correlation", "mode", c.correlation_mode);
  }

  resolve(c);
  return c;
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  json psi_value;
  if (std::isinf(c.psi)) psi_value = "inf";
  else psi_value = c.psi;
  json out{
      {"version", kConfigVersion},
      {"scenario", to_string(c.scenario)},
      {"seed", c.seed},
      {"jobs", c.jobs},
      {"system",
       {{"family", c.family},
        {"d", c.d},
        {"lambda", c.lambda},
        {"lipschitz", c.lipschitz},
        {"rhos", c.rhos},
        {"period", c.period},
        {"sigma2", c.sigma2}}},
      {"observer",
       {{"alpha", c.calibration.alpha},
        {"beta", c.calibration.beta},
        {"obs_noise", c.obs_noise},
        {"context_len", c.context_len},
        {"layers", c.layers},
        {"heads", c.heads}}},
      {"controller",
       {{"psi", psi_value},
        {"epsilon", c.epsilon},
        {"floor_at_zero", c.floor_at_zero},
        {"osc_window", c.osc_window},
        {"progress_tol", c.progress_tol},
        {"max_steps", c.max_steps}}},
      {"run",
       {{"n_seeds", c.n_seeds},
        {"horizon_steps", c.horizon_steps},
        {"success_tol", c.success_tol}}},
      {"sweep", {{"lengths", c.sweep_lengths}, {"lambdas", c.sweep_lambdas}}},
      {"sensitivity", {{"psi_factors", c.psi_factors}}},
      {"calibration",
       {{"n_samples", c.cal_n_samples},
        {"boundary", c.cal_boundary},
        {"label_noise", c.cal_label_noise},
        {"entropy_lo", c.cal_entropy_lo},
        {"entropy_hi", c.cal_entropy_hi},
        {"l2", c.cal_l2},
        {"reference_slope", c.cal_reference_slope},
        {"input_csv", c.cal_input_csv}}},
      {"correlation", {{"mode", c.correlation_mode}}},
  };
  return out.dump(2);
}

ExperimentConfig default_config(Scenario scenario) {
  ExperimentConfig c;
  c.scenario = scenario;
  resolve(c);
  return c;
}

// ---------------------------------------------------------------------------
// running

namespace {

TransitionMap build_map(const ExperimentConfig& c) {
  const std::uint64_t map_seed = Rng::derive(c.seed, kMapSeedStream);
  if (c.family == "linear_isotropic")
    return TransitionMap::linear_isotropic(c.d, std::exp(c.lambda));
  if (c.family == "linear_rotation")
    return TransitionMap::linear_rotation(c.d, std::exp(c.lambda), map_seed);
  if (c.family == "tanh_net") return TransitionMap::tanh_net(c.d, c.lipschitz, map_seed);
  return TransitionMap::switched_isotropic(c.d, c.rhos, c.period);
}

double success_band(const ExperimentConfig& c) {
  return c.success_tol * std::sqrt(static_cast<double>(c.d));
}

// Reset-window bookkeeping: a reset succeeds iff every state from the anchor
// up to (but excluding) the next reset stays inside the band.
int count_ok_resets(const Trajectory& traj, double band) {
  int ok = 0;
  for (std::size_t k = 0; k < traj.resets.size(); ++k) {
    const std::size_t from = static_cast<std::size_t>(traj.resets[k].step);
    const std::size_t to = (k + 1 < traj.resets.size())
                               ? static_cast<std::size_t>(traj.resets[k + 1].step) - 1
                               : traj.states.size() - 1;
    bool good = true;
    for (std::size_t t = from; t <= to && good; ++t)
      if (traj.delta_norm(t) > band) good = false;
    ok += good ? 1 : 0;
  }
  return ok;
}

SeedRecord record_from_halo(const Trajectory& traj, const ExperimentConfig& c,
                            std::uint64_t seed) {
  SeedRecord rec;
  rec.seed = seed;
  rec.steps = static_cast<int>(traj.per_step.size());
  rec.dynamics_steps = traj.dynamics_steps;
  rec.resets = static_cast<int>(traj.resets.size());
  rec.status = to_string(traj.status);
  const double band = success_band(c);
  rec.final_delta = traj.delta_norm(traj.states.size() - 1);
  rec.success = traj.status == RunStatus::kFinished && rec.final_delta <= band;
  rec.resets_ok = count_ok_resets(traj, band);
  return rec;
}

ExperimentResult run_seeded_batch(const ExperimentConfig& c, bool closed_loop,
                                  bool with_correlation) {
  const TransitionMap map = build_map(c);
  const Vec s0 = Vec::Ones(c.d);
  const double band = success_band(c);

  ExperimentResult result;
  result.config = c;
  result.per_seed.resize(c.n_seeds);

  parallel_for(static_cast<std::size_t>(c.n_seeds), c.jobs, [&](std::size_t i) {
    const std::uint64_t noise_seed = run_noise_seed(c.seed, static_cast<int>(i));
    const NoiseModel noise{c.sigma2, noise_seed};
    SeedRecord rec;
    try {
      if (closed_loop) {
        ControllerConfig cfg{c.psi, c.floor_at_zero, c.osc_window, c.progress_tol, c.max_steps};
        RectifierSpec rect{c.epsilon, ""};
        HaloRunOptions opts{c.horizon_steps, c.obs_noise, c.context_len, c.layers, c.heads};
        Trajectory traj = run_halo(map, s0, noise, c.calibration, cfg, rect, opts);
        rec = record_from_halo(traj, c, noise_seed);
        if (with_correlation) {
          RunCorrelation rc = correlation_for_run(traj, c.calibration.boundary(), band);
          rec.pearson_r = rc.r.value_or(nan_value());
          rec.lead_time = rc.lead_time.value_or(nan_value());
        }
      } else {
        Trajectory traj = simulate_open_loop(map, s0, noise, c.horizon_steps);
        rec.seed = noise_seed;
        rec.steps = c.horizon_steps;
        rec.dynamics_steps = c.horizon_steps;
        rec.final_delta = traj.delta_norm(c.horizon_steps);
        rec.success = rec.final_delta <= band;
        rec.status = to_string(traj.status);
      }
    } catch (const DivergenceError&) {
      rec.seed = noise_seed;
      rec.status = "diverged";
      rec.success = false;
      rec.final_delta = nan_value();
    }
    result.per_seed[i] = std::move(rec);
  });

  result.aggregates = aggregates_from_records(result.per_seed, c.horizon_steps);
  return result;
}

json sensitivity_table(const ExperimentConfig& base, std::vector<SeedRecord>& all_records) {
  json table = json::array();
  for (double factor : base.psi_factors) {
    ExperimentConfig arm = base;
    arm.scenario = Scenario::kHalo;
    arm.psi = base.psi * factor;
    ExperimentResult r = run_seeded_batch(arm, /*closed_loop=*/true, false);
    int hard = 0;
    for (const auto& rec : r.per_seed)
      if (rec.status == to_string(RunStatus::kHardLimit)) ++hard;
    table.push_back(
        {{"psi_factor", factor},
         {"psi", arm.psi},
         {"success_rate", r.aggregates.success_rate.value_or(0.0)},
         {"mean_resets", r.aggregates.mean_resets.value_or(0.0)},
         {"overhead", r.aggregates.relative_step_overhead.value_or(0.0)},
         {"hard_limit_rate", static_cast<double>(hard) / arm.n_seeds}});
    all_records.insert(all_records.end(), r.per_seed.begin(), r.per_seed.end());
  }
  return table;
}

std::vector<DriftSample> planted_samples(const ExperimentConfig& c) {
  Rng rng(Rng::derive(c.seed, kCalSeedStream));
  std::vector<DriftSample> samples;
  samples.reserve(c.cal_n_samples);
  for (int i = 0; i < c.cal_n_samples; ++i) {
    DriftSample s;
    s.entropy = c.cal_entropy_lo + (c.cal_entropy_hi - c.cal_entropy_lo) * rng.next_unit();
    s.unstable = s.entropy > c.cal_boundary;
    if (rng.next_unit() < c.cal_label_noise) s.unstable = !s.unstable;
    samples.push_back(s);
  }
  return samples;
}

}  // namespace

Aggregates aggregates_from_records(const std::vector<SeedRecord>& per_seed, int horizon_steps) {
  (void)horizon_steps;
  Aggregates agg;
  if (per_seed.empty()) return agg;
  double successes = 0.0, resets = 0.0, resets_ok = 0.0;
  long steps = 0, dyn_steps = 0;
  double r_sum = 0.0;
  int r_n = 0;
  for (const auto& rec : per_seed) {
    successes += rec.success ? 1.0 : 0.0;
    resets += rec.resets;
    resets_ok += rec.resets_ok;
    steps += rec.steps;
    dyn_steps += rec.dynamics_steps;
    if (std::isfinite(rec.pearson_r)) {
      r_sum += rec.pearson_r;
      ++r_n;
    }
  }
  agg.success_rate = successes / static_cast<double>(per_seed.size());
  agg.mean_resets = resets / static_cast<double>(per_seed.size());
  if (resets > 0.0) agg.rectification_success_rate = resets_ok / resets;
  if (dyn_steps > 0) agg.relative_step_overhead = static_cast<double>(steps) / dyn_steps;
  if (r_n > 0) agg.pearson_r = r_sum / r_n;
  return agg;
}

std::optional<double> rectification_success_rate(const std::vector<SeedRecord>& per_seed) {
  long ok = 0, total = 0;
  for (const auto& rec : per_seed) {
    ok += rec.resets_ok;
    total += rec.resets;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(ok) / static_cast<double>(total);
}

double relative_step_overhead(const ExperimentResult& closed, const ExperimentResult& open) {
  long closed_steps = 0, open_steps = 0;
  for (const auto& rec : closed.per_seed) closed_steps += rec.steps;
  for (const auto& rec : open.per_seed) open_steps += rec.steps;
  if (open_steps == 0) throw ValidationError("relative_step_overhead: open arm has no steps");
  return static_cast<double>(closed_steps) / static_cast<double>(open_steps);
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;  // constant series: undefined
  return sxy / std::sqrt(sxx * syy);
}

RunCorrelation correlation_for_run(const Trajectory& traj, double boundary, double band) {
  RunCorrelation out;
  if (traj.states.empty() || traj.per_step.empty()) return out;
  std::vector<double> omega(traj.per_step.size());
  std::vector<double> delta(traj.per_step.size());
  std::optional<double> first_entropy_breach, first_delta_breach;
  for (std::size_t t = 0; t < traj.per_step.size(); ++t) {
    omega[t] = traj.per_step[t].omega;
    delta[t] = traj.delta_norm(t + 1);
    if (!first_entropy_breach && traj.per_step[t].entropy > boundary)
      first_entropy_breach = static_cast<double>(t + 1);
    if (!first_delta_breach && delta[t] > band)
      first_delta_breach = static_cast<double>(t + 1);
  }
  out.r = pearson(omega, delta);
  if (first_entropy_breach && first_delta_breach)
    out.lead_time = *first_delta_breach - *first_entropy_breach;
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  resolve(c);  // re-derive in case the caller built the struct by hand
  const auto t0 = std::chrono::steady_clock::now();

  ExperimentResult result;
  switch (c.scenario) {
    case Scenario::kOpenLoop:
      result = run_seeded_batch(c, /*closed_loop=*/false, false);
      break;
    case Scenario::kHalo:
      result = run_seeded_batch(c, /*closed_loop=*/true, false);
      break;
    case Scenario::kCorrelation:
      result = run_seeded_batch(c, /*closed_loop=*/true, /*with_correlation=*/true);
      break;
    case Scenario::kSensitivity: {
      result.config = c;
      json extra;
      extra["sensitivity"] = sensitivity_table(c, result.per_seed);
      result.extra_json = extra.dump();
      result.aggregates = aggregates_from_records(result.per_seed, c.horizon_steps);
      break;
    }
    case Scenario::kCalibration: {
      result.config = c;
      std::vector<DriftSample> samples = c.cal_input_csv.empty()
                                             ? planted_samples(c)
                                             : drift_samples_from_csv(read_file(c.cal_input_csv));
      CalibrationConfig fit_cfg;
      fit_cfg.l2 = c.cal_l2;
      fit_cfg.reference_slope = c.cal_reference_slope;
      CalibratedObserver fit = calibrate(samples, fit_cfg);
      json extra;
      extra["calibration"] = json::parse(calibration_to_json(fit));
      extra["planted_boundary"] = c.cal_boundary;
      extra["recovered_boundary"] = fit.fit.boundary_entropy;
      result.extra_json = extra.dump();
      break;
    }
    case Scenario::kPhaseSweep: {
      result.config = c;
      PhaseSweepConfig sweep;
      sweep.d = c.d;
      sweep.sigma2 = c.sigma2;
      sweep.lengths = c.sweep_lengths;
      sweep.lambdas = c.sweep_lambdas;
      sweep.n_seeds = c.n_seeds;
      sweep.success_tol = c.success_tol;
      sweep.base_seed = c.seed;
      sweep.jobs = c.jobs;
      PhaseGrid grid = phase_sweep(sweep);
      json extra;
      extra["grid"] = {{"lengths", grid.lengths},
                       {"lambdas", grid.lambdas},
                       {"success_rates", grid.success_rates},
                       {"diverged", grid.diverged},
                       {"n_seeds", grid.n_seeds},
                       {"success_tol", grid.success_tol},
                       {"d", grid.d},
                       {"sigma2", grid.sigma2}};
      result.extra_json = extra.dump();
      break;
    }
  }

  result.config = c;
  result.tool_version = kToolVersion;
  result.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

CompareResult compare_open_vs_halo(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  resolve(c);
  if (c.scenario != Scenario::kHalo)
    throw ValidationError("compare: config.scenario must be 'halo'");
  CompareResult out;
  ExperimentConfig open_cfg = c;
  open_cfg.scenario = Scenario::kOpenLoop;
  out.open = run_experiment(open_cfg);
  out.halo = run_experiment(c);
  out.overhead = relative_step_overhead(out.halo, out.open);
  out.success_gap = out.halo.aggregates.success_rate.value_or(0.0) -
                    out.open.aggregates.success_rate.value_or(0.0);
  return out;
}

// ---------------------------------------------------------------------------
// result serialization

namespace {

json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

json optional_to_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

std::optional<double> optional_from_json(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

}  // namespace

std::string experiment_result_to_json(const ExperimentResult& result) {
  json seeds = json::array();
  for (const auto& rec : result.per_seed) {
    seeds.push_back({{"seed", rec.seed},
                     {"steps", rec.steps},
                     {"dynamics_steps", rec.dynamics_steps},
                     {"resets", rec.resets},
                     {"resets_ok", rec.resets_ok},
                     {"final_delta", number_or_null(rec.final_delta)},
                     {"success", rec.success},
                     {"status", rec.status},
                     {"pearson_r", number_or_null(rec.pearson_r)},
                     {"lead_time", number_or_null(rec.lead_time)}});
  }
  json out{{"tool_version", result.tool_version},
           {"wall_time_sec", result.wall_time_sec},
           {"config", json::parse(experiment_config_to_json(result.config))},
           {"aggregates",
            {{"success_rate", optional_to_json(result.aggregates.success_rate)},
             {"rectification_success_rate",
              optional_to_json(result.aggregates.rectification_success_rate)},
             {"relative_step_overhead",
              optional_to_json(result.aggregates.relative_step_overhead)},
             {"mean_resets", optional_to_json(result.aggregates.mean_resets)},
             {"pearson_r", optional_to_json(result.aggregates.pearson_r)}}},
           {"per_seed", std::move(seeds)},
           {"extra", json::parse(result.extra_json)}};
  return out.dump(2);
}

ExperimentResult experiment_result_from_json(const std::string& text) {
  json in = json::parse(text, nullptr, false);
  if (in.is_discarded() || !in.is_object())
    throw ValidationError("result document: not a JSON object");
  for (const char* key : {"tool_version", "wall_time_sec", "config", "aggregates", "per_seed",
                          "extra"})
    if (!in.contains(key))
      throw ValidationError(std::string("result document: missing '") + key + "'");
  ExperimentResult result;
  result.tool_version = in["tool_version"].get<std::string>();
  result.wall_time_sec = in["wall_time_sec"].get<double>();
  result.config = parse_experiment_config(in["config"].dump());
  const json& agg = in["aggregates"];
  result.aggregates.success_rate = optional_from_json(agg, "success_rate");
  result.aggregates.rectification_success_rate =
      optional_from_json(agg, "rectification_success_rate");
  result.aggregates.relative_step_overhead =
      optional_from_json(agg, "relative_step_overhead");
  result.aggregates.mean_resets = optional_from_json(agg, "mean_resets");
  result.aggregates.pearson_r = optional_from_json(agg, "pearson_r");
  for (const auto& r : in["per_seed"]) {
    SeedRecord rec;
    rec.seed = r["seed"].get<std::uint64_t>();
    rec.steps = r["steps"].get<int>();
    rec.dynamics_steps = r["dynamics_steps"].get<int>();
    rec.resets = r["resets"].get<int>();
    rec.resets_ok = r["resets_ok"].get<int>();
    rec.final_delta = r["final_delta"].is_null() ? nan_value() : r["final_delta"].get<double>();
    rec.success = r["success"].get<bool>();
    rec.status = r["status"].get<std::string>();
    rec.pearson_r = r["pearson_r"].is_null() ? nan_value() : r["pearson_r"].get<double>();
    rec.lead_time = r["lead_time"].is_null() ? nan_value() : r["lead_time"].get<double>();
    result.per_seed.push_back(std::move(rec));
  }
  result.extra_json = in["extra"].dump();
  return result;
}

std::string per_seed_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "seed,steps,dynamics_steps,resets,resets_ok,final_delta,success,status,pearson_r,"
         "lead_time\n";
  for (const auto& rec : result.per_seed) {
    out << rec.seed << ',' << rec.steps << ',' << rec.dynamics_steps << ',' << rec.resets << ','
        << rec.resets_ok << ',' << format_double(rec.final_delta) << ','
        << (rec.success ? 1 : 0) << ',' << rec.status << ',' << format_double(rec.pearson_r)
        << ',' << format_double(rec.lead_time) << "\n";
  }
  return out.str();
}

std::string compare_csv(const CompareResult& result) {
  if (result.open.per_seed.size() != result.halo.per_seed.size())
    throw ValidationError("compare_csv: arms have different seed counts");
  std::ostringstream out;
  out << "seed,open_steps,open_final_delta,open_success,halo_steps,halo_dynamics_steps,"
         "halo_resets,halo_final_delta,halo_success,halo_status\n";
  for (std::size_t i = 0; i < result.open.per_seed.size(); ++i) {
    const SeedRecord& o = result.open.per_seed[i];
    const SeedRecord& h = result.halo.per_seed[i];
    if (o.seed != h.seed) throw ValidationError("compare_csv: seed mismatch between arms");
    out << o.seed << ',' << o.steps << ',' << format_double(o.final_delta) << ','
        << (o.success ? 1 : 0) << ',' << h.steps << ',' << h.dynamics_steps << ',' << h.resets
        << ',' << format_double(h.final_delta) << ',' << (h.success ? 1 : 0) << ',' << h.status
        << "\n";
  }
  return out.str();
}

}  // namespace halo
