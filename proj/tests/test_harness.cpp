#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "halo/errors.hpp"
#include "halo/harness.hpp"
#include "halo/io.hpp"
#include "halo/rng.hpp"

using namespace halo;
using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool same_double(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return a == b;
}

void check_config_equal(const ExperimentConfig& a, const ExperimentConfig& b) {
  CHECK(a.scenario == b.scenario);
  CHECK(a.seed == b.seed);
  CHECK(a.jobs == b.jobs);
  CHECK(a.family == b.family);
  CHECK(a.d == b.d);
  CHECK(same_double(a.lambda, b.lambda));
  CHECK(same_double(a.lipschitz, b.lipschitz));
  CHECK(a.rhos == b.rhos);
  CHECK(a.period == b.period);
  CHECK(same_double(a.sigma2, b.sigma2));
  CHECK(same_double(a.calibration.alpha, b.calibration.alpha));
  CHECK(same_double(a.calibration.beta, b.calibration.beta));
  CHECK(same_double(a.obs_noise, b.obs_noise));
  CHECK(a.context_len == b.context_len);
  CHECK(a.layers == b.layers);
  CHECK(a.heads == b.heads);
  CHECK(same_double(a.psi, b.psi));
  CHECK(same_double(a.epsilon, b.epsilon));
  CHECK(a.floor_at_zero == b.floor_at_zero);
  CHECK(a.osc_window == b.osc_window);
  CHECK(same_double(a.progress_tol, b.progress_tol));
  CHECK(a.max_steps == b.max_steps);
  CHECK(a.n_seeds == b.n_seeds);
  CHECK(a.horizon_steps == b.horizon_steps);
  CHECK(same_double(a.success_tol, b.success_tol));
  CHECK(a.sweep_lengths == b.sweep_lengths);
  CHECK(a.sweep_lambdas == b.sweep_lambdas);
  CHECK(a.psi_factors == b.psi_factors);
  CHECK(a.cal_n_samples == b.cal_n_samples);
  CHECK(same_double(a.cal_boundary, b.cal_boundary));
  CHECK(same_double(a.cal_label_noise, b.cal_label_noise));
  CHECK(same_double(a.cal_entropy_lo, b.cal_entropy_lo));
  CHECK(same_double(a.cal_entropy_hi, b.cal_entropy_hi));
  CHECK(same_double(a.cal_l2, b.cal_l2));
  CHECK(same_double(a.cal_reference_slope, b.cal_reference_slope));
  CHECK(a.cal_input_csv == b.cal_input_csv);
  CHECK(a.correlation_mode == b.correlation_mode);
  CHECK(same_double(a.n_star, b.n_star));
}

}  // namespace

TEST_CASE("config parsing: errors carry the full field path") {
  CHECK_THROWS_WITH_AS((void)parse_experiment_config("not json"),
                       doctest::Contains("not a JSON object"), ValidationError);
  CHECK_THROWS_WITH_AS((void)parse_experiment_config(R"({"scenario":"halo"})"),
                       doctest::Contains("config.version"), ValidationError);
  CHECK_THROWS_WITH_AS((void)parse_experiment_config(R"({"version":7,"scenario":"halo"})"),
                       doctest::Contains("unsupported version 7"), ValidationError);
  CHECK_THROWS_WITH_AS((void)parse_experiment_config(R"({"version":1})"),
                       doctest::Contains("config.scenario"), ValidationError);
  CHECK_THROWS_WITH_AS(
      (void)parse_experiment_config(R"({"version":1,"scenario":"warp_drive"})"),
      doctest::Contains("unknown scenario 'warp_drive'"), ValidationError);
  CHECK_THROWS_WITH_AS(
      (void)parse_experiment_config(R"({"version":1,"scenario":"halo","bogus":1})"),
      doctest::Contains("config: unknown key 'bogus'"), ValidationError);
  CHECK_THROWS_WITH_AS(
      (void)parse_experiment_config(
          R"({"version":1,"scenario":"halo","system":{"d":4,"drift":0.1}})"),
      doctest::Contains("config.system: unknown key 'drift'"), ValidationError);
  CHECK_THROWS_WITH_AS(
      (void)parse_experiment_config(
          R"({"version":1,"scenario":"halo","controller":{"budget":1}})"),
      doctest::Contains("config.controller: unknown key 'budget'"), ValidationError);
  CHECK_THROWS_WITH_AS(
      (void)parse_experiment_config(
          R"({"version":1,"scenario":"halo","system":{"d":"four"}})"),
      doctest::Contains("config.system.d: must be an integer"), ValidationError);
  CHECK_THROWS_WITH_AS(
      (void)parse_experiment_config(
          R"({"version":1,"scenario":"halo","system":{"d":0}})"),
      doctest::Contains("config.system.d: must be >= 1"), ValidationError);
  CHECK_THROWS_WITH_AS(
      (void)parse_experiment_config(
          R"({"version":1,"scenario":"halo","run":{"n_seeds":0}})"),
      doctest::Contains("config.run.n_seeds"), ValidationError);
  CHECK_THROWS_WITH_AS(
      (void)parse_experiment_config(
          R"({"version":1,"scenario":"halo","system":{"family":"pendulum"}})"),
      doctest::Contains("unknown family 'pendulum'"), ValidationError);
  CHECK_THROWS_WITH_AS(
      (void)parse_experiment_config(
          R"({"version":1,"scenario":"halo","controller":{"psi":-2.0}})"),
      doctest::Contains("config.controller.psi"), ValidationError);
  CHECK_THROWS_WITH_AS(
      (void)parse_experiment_config(
          R"({"version":1,"scenario":"halo","controller":{"psi":"huge"}})"),
      doctest::Contains("only string form is \"inf\""), ValidationError);
  CHECK_THROWS_WITH_AS(
      (void)parse_experiment_config(
          R"({"version":1,"scenario":"correlation","correlation":{"mode":"both"}})"),
      doctest::Contains("config.correlation.mode"), ValidationError);
  // tanh_net has no derivable horizon: the config must say one.
  CHECK_THROWS_WITH_AS(
      (void)parse_experiment_config(
          R"({"version":1,"scenario":"open_loop","system":{"family":"tanh_net"}})"),
      doctest::Contains("config.run.horizon_steps: required"), ValidationError);
}

TEST_CASE("config parsing: psi accepts \"inf\" and serializes it back") {
  ExperimentConfig c = parse_experiment_config(
      R"({"version":1,"scenario":"halo","controller":{"psi":"inf"}})");
  CHECK(std::isinf(c.psi));
  const std::string text = experiment_config_to_json(c);
  CHECK(text.find("\"psi\": \"inf\"") != std::string::npos);
  ExperimentConfig back = parse_experiment_config(text);
  CHECK(std::isinf(back.psi));
}

TEST_CASE("config defaults: documented derivations for the standard scenario") {
  ExperimentConfig c = default_config(Scenario::kHalo);
  CHECK(c.d == 4);
  CHECK(c.lambda == 0.1);
  CHECK(c.sigma2 == 0.01);
  CHECK(c.n_star == doctest::Approx(12.0).epsilon(2e-4));
  CHECK(c.horizon_steps == 48);                        // round(4 N*)
  CHECK(c.psi == doctest::Approx(0.96).epsilon(1e-3)); // 0.8 * lambda * N*
  CHECK(c.max_steps == 60);                            // ceil(1.25 * horizon)
  CHECK(c.calibration.alpha == 0.85);
  CHECK(c.calibration.beta == -2.5);

  // Open loop never needs a controller budget; phase sweep derives its axes.
  ExperimentConfig sweep = default_config(Scenario::kPhaseSweep);
  CHECK(sweep.sweep_lambdas.size() == 6);
  CHECK(sweep.sweep_lambdas.front() == doctest::Approx(0.02));
  CHECK(sweep.sweep_lambdas.back() == doctest::Approx(0.3));
  CHECK(!sweep.sweep_lengths.empty());
  CHECK(sweep.sweep_lengths.front() >= 1);
}

TEST_CASE("config round trip: parse(write(c)) == c for every scenario") {
  for (Scenario s : {Scenario::kOpenLoop, Scenario::kHalo, Scenario::kPhaseSweep,
                     Scenario::kSensitivity, Scenario::kCalibration, Scenario::kCorrelation}) {
    ExperimentConfig c = default_config(s);
    ExperimentConfig back = parse_experiment_config(experiment_config_to_json(c));
    check_config_equal(c, back);
  }
  // A heavily customized config survives too.
  ExperimentConfig c = parse_experiment_config(R"({
    "version": 1, "scenario": "halo", "seed": 987654321, "jobs": 3,
    "system": {"family": "switched_isotropic", "d": 3, "rhos": [1.2, 0.9], "period": 2,
               "sigma2": 0.02},
    "observer": {"alpha": 0.9, "beta": -2.0, "obs_noise": 0.15, "context_len": 128,
                 "layers": 1, "heads": 3},
    "controller": {"psi": 1.5, "epsilon": 0.25, "floor_at_zero": false, "osc_window": 4,
                   "progress_tol": 1e-4, "max_steps": 90},
    "run": {"n_seeds": 77, "horizon_steps": 60, "success_tol": 0.5}
  })");
  CHECK(c.psi == 1.5);
  CHECK(c.rhos == std::vector<double>{1.2, 0.9});
  CHECK_FALSE(c.floor_at_zero);
  ExperimentConfig back = parse_experiment_config(experiment_config_to_json(c));
  check_config_equal(c, back);
}

TEST_CASE("scenario names round-trip") {
  for (Scenario s : {Scenario::kOpenLoop, Scenario::kHalo, Scenario::kPhaseSweep,
                     Scenario::kSensitivity, Scenario::kCalibration, Scenario::kCorrelation})
    CHECK(scenario_from_string(to_string(s)) == s);
  CHECK_THROWS_AS((void)scenario_from_string("closed_loop"), ValidationError);
}

TEST_CASE("pearson: textbook cases") {
  CHECK(pearson({1, 2, 3, 4}, {3, 5, 7, 9}).value() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson({1, 2, 3}, {3, 2, 1}).value() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(!pearson({1, 1, 1}, {1, 2, 3}).has_value());  // constant series undefined
  CHECK(!pearson({1, 2}, {1, 2, 3}).has_value());     // length mismatch
  CHECK(!pearson({1}, {1}).has_value());              // too short
  CHECK(pearson({0, 1, 2, 3}, {5, 4, 6, 7}).value() ==
        doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("correlation_for_run: planted omega/delta relation and lead time") {
  Trajectory traj;
  traj.d = 1;
  Vec z = Vec::Zero(1);
  traj.states.push_back(z);
  traj.ideal_states.push_back(z);
  const double deltas[] = {0.1, 0.2, 0.5, 0.9, 1.5};
  const double entropies[] = {1.0, 1.5, 2.5, 1.0, 1.0};
  for (int t = 0; t < 5; ++t) {
    Vec s(1);
    s << deltas[t];
    traj.states.push_back(s);
    traj.ideal_states.push_back(z);
    traj.per_step.push_back(StepRecord{entropies[t], 0.0, 2.0 * deltas[t], StepEvent::kStep});
    traj.dynamics_steps += 1;
  }
  traj.validate();

  RunCorrelation rc = correlation_for_run(traj, /*boundary=*/2.0, /*band=*/1.0);
  REQUIRE(rc.r.has_value());
  CHECK(*rc.r == doctest::Approx(1.0).epsilon(1e-12));  // omega = 2*delta exactly
  REQUIRE(rc.lead_time.has_value());
  CHECK(*rc.lead_time == 2.0);  // delta breaches at 5, entropy at 3

  // No band breach: no lead time, correlation still defined.
  RunCorrelation none = correlation_for_run(traj, 2.0, /*band=*/10.0);
  CHECK(none.r.has_value());
  CHECK(!none.lead_time.has_value());
}

TEST_CASE("rectification_success_rate and aggregates recompute") {
  std::vector<SeedRecord> records(3);
  records[0].resets = 2;
  records[0].resets_ok = 1;
  records[1].resets = 0;
  records[2].resets = 2;
  records[2].resets_ok = 2;
  CHECK(rectification_success_rate(records).value() == doctest::Approx(0.75));
  CHECK(!rectification_success_rate({}).has_value());
  std::vector<SeedRecord> no_resets(4);
  CHECK(!rectification_success_rate(no_resets).has_value());

  records[0].success = true;
  records[0].steps = 12;
  records[0].dynamics_steps = 10;
  records[1].steps = 10;
  records[1].dynamics_steps = 10;
  records[2].steps = 14;
  records[2].dynamics_steps = 10;
  records[2].pearson_r = 0.5;
  Aggregates agg = aggregates_from_records(records, 10);
  CHECK(agg.success_rate.value() == doctest::Approx(1.0 / 3.0));
  CHECK(agg.mean_resets.value() == doctest::Approx(4.0 / 3.0));
  CHECK(agg.rectification_success_rate.value() == doctest::Approx(0.75));
  CHECK(agg.relative_step_overhead.value() == doctest::Approx(36.0 / 30.0));
  CHECK(agg.pearson_r.value() == doctest::Approx(0.5));  // NaNs are skipped
}

TEST_CASE("open loop without noise always succeeds with zero error") {
  ExperimentConfig c = parse_experiment_config(R"({
    "version": 1, "scenario": "open_loop",
    "system": {"sigma2": 0.0},
    "run": {"n_seeds": 8, "horizon_steps": 30}
  })");
  ExperimentResult r = run_experiment(c);
  CHECK(r.aggregates.success_rate.value() == 1.0);
  REQUIRE(r.per_seed.size() == 8);
  for (const auto& rec : r.per_seed) {
    CHECK(rec.final_delta == 0.0);
    CHECK(rec.success);
    CHECK(rec.steps == 30);
    CHECK(rec.status == "finished");
  }
}

TEST_CASE("run_experiment: aggregates equal the recompute helper") {
  ExperimentConfig c = default_config(Scenario::kHalo);
  c.n_seeds = 25;
  c.jobs = 4;
  ExperimentResult r = run_experiment(c);
  Aggregates again = aggregates_from_records(r.per_seed, c.horizon_steps);
  CHECK(r.aggregates.success_rate == again.success_rate);
  CHECK(r.aggregates.rectification_success_rate == again.rectification_success_rate);
  CHECK(r.aggregates.relative_step_overhead == again.relative_step_overhead);
  CHECK(r.aggregates.mean_resets == again.mean_resets);
  CHECK(r.aggregates.pearson_r == again.pearson_r);
}

TEST_CASE("run_experiment: deterministic given the config, independent of jobs") {
  ExperimentConfig c = default_config(Scenario::kHalo);
  c.n_seeds = 16;
  c.obs_noise = 0.1;
  c.jobs = 1;
  ExperimentResult a = run_experiment(c);
  c.jobs = 8;
  ExperimentResult b = run_experiment(c);
  // jobs parallelizes, it must not change any result.
  CHECK(per_seed_csv(a) == per_seed_csv(b));
}

TEST_CASE("infinite budget: halo arm reproduces the open arm seed-for-seed") {
  ExperimentConfig c = default_config(Scenario::kHalo);
  c.psi = kInf;
  c.n_seeds = 12;
  CompareResult cmp = compare_open_vs_halo(c);
  REQUIRE(cmp.open.per_seed.size() == cmp.halo.per_seed.size());
  for (std::size_t i = 0; i < cmp.open.per_seed.size(); ++i) {
    const SeedRecord& o = cmp.open.per_seed[i];
    const SeedRecord& h = cmp.halo.per_seed[i];
    CHECK(o.seed == h.seed);                  // matched dynamics noise
    CHECK(o.final_delta == h.final_delta);    // byte-identical states
    CHECK(h.resets == 0);
    CHECK(o.steps == h.steps);
    CHECK(o.success == h.success);
  }
  CHECK(cmp.overhead == 1.0);
  CHECK(cmp.success_gap == 0.0);
  // compare_csv accepts the matched arms and starts with the documented header.
  const std::string csv = compare_csv(cmp);
  CHECK(csv.substr(0, csv.find('\n')) ==
        "seed,open_steps,open_final_delta,open_success,halo_steps,halo_dynamics_steps,"
        "halo_resets,halo_final_delta,halo_success,halo_status");
  CHECK_THROWS_AS((void)compare_open_vs_halo(default_config(Scenario::kOpenLoop)),
                  ValidationError);
}

TEST_CASE("diverging systems are recorded, not fatal") {
  ExperimentConfig c = parse_experiment_config(R"({
    "version": 1, "scenario": "open_loop",
    "system": {"lambda": 2.0},
    "run": {"n_seeds": 3, "horizon_steps": 400}
  })");
  ExperimentResult r = run_experiment(c);
  REQUIRE(r.per_seed.size() == 3);
  for (const auto& rec : r.per_seed) {
    CHECK(rec.status == "diverged");
    CHECK_FALSE(rec.success);
    CHECK(std::isnan(rec.final_delta));
  }
  CHECK(r.aggregates.success_rate.value() == 0.0);

  // NaN encodes as null and survives the JSON round trip.
  ExperimentResult back = experiment_result_from_json(experiment_result_to_json(r));
  CHECK(std::isnan(back.per_seed[0].final_delta));
  CHECK(back.per_seed[0].status == "diverged");
}

TEST_CASE("result JSON: full round trip across scenarios") {
  ExperimentConfig c = default_config(Scenario::kCorrelation);
  c.n_seeds = 6;
  c.obs_noise = 0.1;
  ExperimentResult r = run_experiment(c);
  ExperimentResult back = experiment_result_from_json(experiment_result_to_json(r));

  CHECK(back.tool_version == r.tool_version);
  CHECK(back.wall_time_sec == r.wall_time_sec);
  check_config_equal(back.config, r.config);
  REQUIRE(back.per_seed.size() == r.per_seed.size());
  for (std::size_t i = 0; i < r.per_seed.size(); ++i) {
    const SeedRecord& x = r.per_seed[i];
    const SeedRecord& y = back.per_seed[i];
    CHECK(x.seed == y.seed);
    CHECK(x.steps == y.steps);
    CHECK(x.dynamics_steps == y.dynamics_steps);
    CHECK(x.resets == y.resets);
    CHECK(x.resets_ok == y.resets_ok);
    CHECK(same_double(x.final_delta, y.final_delta));
    CHECK(x.success == y.success);
    CHECK(x.status == y.status);
    CHECK(same_double(x.pearson_r, y.pearson_r));
    CHECK(same_double(x.lead_time, y.lead_time));
  }
  CHECK(back.aggregates.success_rate == r.aggregates.success_rate);
  CHECK(back.aggregates.pearson_r == r.aggregates.pearson_r);
  CHECK(json::parse(back.extra_json) == json::parse(r.extra_json));

  CHECK_THROWS_WITH_AS((void)experiment_result_from_json(R"({"tool_version":"x"})"),
                       doctest::Contains("missing"), ValidationError);
}

TEST_CASE("per-seed CSV: documented header and one line per seed") {
  ExperimentConfig c = default_config(Scenario::kHalo);
  c.n_seeds = 5;
  ExperimentResult r = run_experiment(c);
  const std::string csv = per_seed_csv(r);
  CHECK(csv.substr(0, csv.find('\n')) ==
        "seed,steps,dynamics_steps,resets,resets_ok,final_delta,success,status,pearson_r,"
        "lead_time");
  int lines = 0;
  for (char ch : csv)
    if (ch == '\n') ++lines;
  CHECK(lines == 6);  // header + 5 seeds
}

TEST_CASE("sensitivity scenario: one table row per factor, records pooled") {
  ExperimentConfig c = default_config(Scenario::kSensitivity);
  c.n_seeds = 10;
  c.jobs = 4;
  ExperimentResult r = run_experiment(c);
  json extra = json::parse(r.extra_json);
  REQUIRE(extra.contains("sensitivity"));
  REQUIRE(extra["sensitivity"].size() == 3);  // default factors 0.25, 1, 4
  for (const auto& row : extra["sensitivity"]) {
    CHECK(row.contains("psi_factor"));
    CHECK(row.contains("psi"));
    CHECK(row.contains("success_rate"));
    CHECK(row.contains("mean_resets"));
    CHECK(row.contains("overhead"));
    CHECK(row.contains("hard_limit_rate"));
    CHECK(row["success_rate"].get<double>() >= 0.0);
    CHECK(row["success_rate"].get<double>() <= 1.0);
  }
  CHECK(extra["sensitivity"][0]["psi"].get<double>() ==
        doctest::Approx(0.25 * extra["sensitivity"][1]["psi"].get<double>()));
  CHECK(r.per_seed.size() == 30);  // 3 factors x 10 seeds
}

TEST_CASE("calibration scenario: planted boundary recovered within 0.1") {
  ExperimentConfig c = default_config(Scenario::kCalibration);
  ExperimentResult r = run_experiment(c);
  json extra = json::parse(r.extra_json);
  CHECK(extra["planted_boundary"].get<double>() == 2.9412);
  const double recovered = extra["recovered_boundary"].get<double>();
  CHECK(std::abs(recovered - 2.9412) <= 0.1);
  CHECK(extra["calibration"]["fit"]["n_samples"].get<int>() == 2000);
  CHECK(r.per_seed.empty());
  CHECK(!r.aggregates.success_rate.has_value());
}

TEST_CASE("calibration scenario: reads samples from CSV when configured") {
  // Planted logistic labels around boundary 2.0 (noisy, so the classes
  // overlap and the fit is well conditioned).
  Rng rng(123);
  std::vector<DriftSample> samples;
  for (int i = 0; i < 1500; ++i) {
    const double h = 4.0 * rng.next_unit();
    const double p = 1.0 / (1.0 + std::exp(-3.5 * (h - 2.0)));
    samples.push_back({h, rng.next_unit() < p});
  }
  const std::string path = "/tmp/halo_harness_cal_input.csv";
  write_file(path, drift_samples_to_csv(samples));

  ExperimentConfig c = default_config(Scenario::kCalibration);
  c.cal_input_csv = path;
  ExperimentResult r = run_experiment(c);
  std::remove(path.c_str());

  json extra = json::parse(r.extra_json);
  CHECK(extra["calibration"]["fit"]["n_samples"].get<int>() == 1500);
  CHECK(std::abs(extra["recovered_boundary"].get<double>() - 2.0) < 0.15);
}

TEST_CASE("phase sweep scenario: grid payload matches a direct sweep") {
  ExperimentConfig c = parse_experiment_config(R"({
    "version": 1, "scenario": "phase_sweep", "seed": 99,
    "system": {"sigma2": 0.01},
    "run": {"n_seeds": 40},
    "sweep": {"lengths": [2, 4, 6], "lambdas": [0.1, 0.2]}
  })");
  ExperimentResult r = run_experiment(c);
  json extra = json::parse(r.extra_json);
  REQUIRE(extra.contains("grid"));
  CHECK(extra["grid"]["lengths"] == json::array({2, 4, 6}));
  CHECK(extra["grid"]["lambdas"].size() == 2);

  PhaseSweepConfig direct;
  direct.d = c.d;
  direct.sigma2 = c.sigma2;
  direct.lengths = {2, 4, 6};
  direct.lambdas = {0.1, 0.2};
  direct.n_seeds = 40;
  direct.success_tol = c.success_tol;
  direct.base_seed = 99;
  PhaseGrid grid = phase_sweep(direct);
  for (std::size_t row = 0; row < 2; ++row)
    for (std::size_t col = 0; col < 3; ++col)
      CHECK(extra["grid"]["success_rates"][row][col].get<double>() ==
            grid.success_rates[row][col]);
}

TEST_CASE("correlation scenario: per-seed diagnostics populated") {
  ExperimentConfig c = default_config(Scenario::kCorrelation);
  c.n_seeds = 8;
  c.obs_noise = 0.1;
  ExperimentResult r = run_experiment(c);
  REQUIRE(r.per_seed.size() == 8);
  int with_r = 0;
  for (const auto& rec : r.per_seed)
    if (std::isfinite(rec.pearson_r)) {
      ++with_r;
      CHECK(rec.pearson_r >= -1.0);
      CHECK(rec.pearson_r <= 1.0);
    }
  CHECK(with_r > 0);
  CHECK(r.aggregates.pearson_r.has_value());

  // open_loop mode forces an infinite budget: no resets anywhere.
  ExperimentConfig open_mode = default_config(Scenario::kCorrelation);
  open_mode.correlation_mode = "open_loop";
  open_mode.n_seeds = 4;
  ExperimentResult open_r = run_experiment(open_mode);
  for (const auto& rec : open_r.per_seed) CHECK(rec.resets == 0);
}
