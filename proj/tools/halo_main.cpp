// Command-line front end: every subcommand is a thin wrapper over the library
// (config in, deterministic artifacts out). Exit codes: 0 success, 1 invalid
// input (bad flags, bad config, bad file), 2 runtime failure.
#include <CLI11.hpp>

#include <cmath>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "halo/adapter.hpp"
#include "halo/errors.hpp"
#include "halo/harness.hpp"
#include "halo/horizon.hpp"
#include "halo/io.hpp"

namespace {

using nlohmann::json;

// Human-facing summary numbers; files always carry full precision.
std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out_dir = ".";
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config (JSON)");
  cmd->add_option("--seed", opts.seed, "override config.seed");
  cmd->add_option("--jobs", opts.jobs, "override config.jobs (0 = hardware threads)");
  cmd->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--format", opts.format, "tabular output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
}

void apply_overrides(halo::ExperimentConfig& c, const CommonOpts& opts) {
  if (opts.seed) c.seed = *opts.seed;
  if (opts.jobs) {
    if (*opts.jobs < 0) throw halo::ValidationError("--jobs: must be >= 0");
    c.jobs = *opts.jobs;
  }
}

halo::ExperimentConfig load_config(halo::Scenario want, const CommonOpts& opts) {
  halo::ExperimentConfig c;
  if (opts.config_path.empty()) {
    c = halo::default_config(want);
  } else {
    c = halo::parse_experiment_config(halo::read_file(opts.config_path));
    if (c.scenario != want)
      throw halo::ValidationError(std::string("config.scenario: expected '") +
                                  halo::to_string(want) + "' for this subcommand, got '" +
                                  halo::to_string(c.scenario) + "'");
  }
  apply_overrides(c, opts);
  return c;
}

std::string out_path(const CommonOpts& opts, const std::string& name) {
  std::filesystem::create_directories(opts.out_dir);
  return (std::filesystem::path(opts.out_dir) / name).string();
}

void print_aggregates(const std::string& label, const halo::ExperimentResult& r) {
  std::cout << label << ": seeds=" << r.per_seed.size();
  const halo::Aggregates& a = r.aggregates;
  if (a.success_rate) std::cout << " success_rate=" << fmt6(*a.success_rate);
  if (a.mean_resets) std::cout << " mean_resets=" << fmt6(*a.mean_resets);
  if (a.rectification_success_rate)
    std::cout << " rectification_success_rate=" << fmt6(*a.rectification_success_rate);
  if (a.relative_step_overhead) std::cout << " overhead=" << fmt6(*a.relative_step_overhead);
  if (a.pearson_r) std::cout << " pearson_r=" << fmt6(*a.pearson_r);
  std::cout << "\n";
}

int run_scenario_command(halo::Scenario scenario, const CommonOpts& opts) {
  halo::ExperimentConfig c = load_config(scenario, opts);
  halo::ExperimentResult r = halo::run_experiment(c);
  halo::write_file(out_path(opts, "result.json"), halo::experiment_result_to_json(r));
  if (opts.format == "csv" && !r.per_seed.empty())
    halo::write_file(out_path(opts, "per_seed.csv"), halo::per_seed_csv(r));
  print_aggregates(halo::to_string(c.scenario), r);
  return 0;
}

halo::PhaseGrid grid_from_extra(const std::string& extra_json) {
  json extra = json::parse(extra_json);
  const json& g = extra.at("grid");
  halo::PhaseGrid grid;
  grid.lengths = g.at("lengths").get<std::vector<int>>();
  grid.lambdas = g.at("lambdas").get<std::vector<double>>();
  grid.success_rates = g.at("success_rates").get<std::vector<std::vector<double>>>();
  grid.diverged = g.at("diverged").get<std::vector<std::vector<int>>>();
  grid.n_seeds = g.at("n_seeds").get<int>();
  grid.success_tol = g.at("success_tol").get<double>();
  grid.d = g.at("d").get<int>();
  grid.sigma2 = g.at("sigma2").get<double>();
  return grid;
}

std::string sensitivity_csv(const json& table) {
  std::string csv = "psi_factor,psi,success_rate,mean_resets,overhead,hard_limit_rate\n";
  for (const json& row : table) {
    csv += halo::format_double(row.at("psi_factor").get<double>()) + ",";
    csv += halo::format_double(row.at("psi").get<double>()) + ",";
    csv += halo::format_double(row.at("success_rate").get<double>()) + ",";
    csv += halo::format_double(row.at("mean_resets").get<double>()) + ",";
    csv += halo::format_double(row.at("overhead").get<double>()) + ",";
    csv += halo::format_double(row.at("hard_limit_rate").get<double>()) + "\n";
  }
  return csv;
}

// `sweep` covers both grid-style scenarios: the length x difficulty phase
// diagram (default) and the budget-factor sensitivity table.
int run_sweep(const CommonOpts& opts) {
  halo::ExperimentConfig c;
  if (opts.config_path.empty()) {
    c = halo::default_config(halo::Scenario::kPhaseSweep);
  } else {
    c = halo::parse_experiment_config(halo::read_file(opts.config_path));
    if (c.scenario != halo::Scenario::kPhaseSweep && c.scenario != halo::Scenario::kSensitivity)
      throw halo::ValidationError(
          std::string("config.scenario: expected 'phase_sweep' or 'sensitivity' for this "
                      "subcommand, got '") +
          halo::to_string(c.scenario) + "'");
  }
  apply_overrides(c, opts);
  halo::ExperimentResult r = halo::run_experiment(c);
  halo::write_file(out_path(opts, "result.json"), halo::experiment_result_to_json(r));
  if (c.scenario == halo::Scenario::kSensitivity) {
    json table = json::parse(r.extra_json).at("sensitivity");
    if (opts.format == "csv")
      halo::write_file(out_path(opts, "sensitivity.csv"), sensitivity_csv(table));
    std::cout << "sensitivity: factors=" << table.size()
              << " seeds_per_factor=" << c.n_seeds << "\n";
    return 0;
  }
  halo::PhaseGrid grid = grid_from_extra(r.extra_json);
  if (opts.format == "csv") {
    halo::write_file(out_path(opts, "phase_grid.csv"), halo::phase_grid_to_csv(grid));
    halo::write_file(out_path(opts, "horizon_curve.csv"), halo::horizon_curve_to_csv(grid));
  }
  std::cout << "phase_sweep: difficulties=" << grid.lambdas.size()
            << " lengths=" << grid.lengths.size() << " seeds_per_cell=" << grid.n_seeds << "\n";
  return 0;
}

int run_calibrate(const CommonOpts& opts) {
  halo::ExperimentConfig c = load_config(halo::Scenario::kCalibration, opts);
  halo::ExperimentResult r = halo::run_experiment(c);
  halo::write_file(out_path(opts, "result.json"), halo::experiment_result_to_json(r));
  json extra = json::parse(r.extra_json);
  halo::write_file(out_path(opts, "calibration.json"), extra.at("calibration").dump());
  std::cout << "calibration: boundary=" << fmt6(extra.at("recovered_boundary").get<double>())
            << " alpha=" << fmt6(extra.at("calibration").at("alpha").get<double>())
            << " beta=" << fmt6(extra.at("calibration").at("beta").get<double>()) << "\n";
  return 0;
}

int run_compare(const CommonOpts& opts) {
  halo::ExperimentConfig c = load_config(halo::Scenario::kHalo, opts);
  halo::CompareResult cmp = halo::compare_open_vs_halo(c);
  json doc{{"overhead", cmp.overhead},
           {"success_gap", cmp.success_gap},
           {"open", json::parse(halo::experiment_result_to_json(cmp.open))},
           {"halo", json::parse(halo::experiment_result_to_json(cmp.halo))}};
  halo::write_file(out_path(opts, "compare.json"), doc.dump(2) + "\n");
  if (opts.format == "csv")
    halo::write_file(out_path(opts, "open_vs_halo.csv"), halo::compare_csv(cmp));
  std::cout << "compare: open_success=" << fmt6(cmp.open.aggregates.success_rate.value_or(0.0))
            << " halo_success=" << fmt6(cmp.halo.aggregates.success_rate.value_or(0.0))
            << " success_gap=" << fmt6(cmp.success_gap) << " overhead=" << fmt6(cmp.overhead)
            << "\n";
  return 0;
}

struct HorizonOpts {
  double lambda = 0.1;
  double sigma2 = 0.01;
  double psi = halo::matched_psi(0.6728);
};

int run_horizon(const HorizonOpts& h) {
  halo::HorizonParams params{h.lambda, h.sigma2, h.psi};
  halo::HorizonReport report = halo::horizon_consistency(params);
  std::cout << "n_star = " << halo::format_double(report.n_star) << "\n"
            << "n_star_ceil = " << report.n_star_ceil << "\n"
            << "crossing = " << report.crossing << "\n";
  return 0;
}

struct StubOpts {
  int port = 0;  // 0 = stdio
  std::vector<double> entropies;
  int steps = 8;
  double entropy0 = 1.0;
  double slope = 0.25;
  std::string anchor_prefix = "anchor";
  std::string anchor_fixed;
  bool anchor_fixed_set = false;
  int fail_after = -1;
};

int run_stub(const StubOpts& s) {
  halo::StubScript script;
  if (!s.entropies.empty()) {
    script.entropies = s.entropies;
  } else {
    if (s.steps < 1) throw halo::ValidationError("--steps: must be >= 1");
    for (int i = 0; i < s.steps; ++i) script.entropies.push_back(s.entropy0 + s.slope * i);
  }
  script.anchor_prefix = s.anchor_prefix;
  if (s.anchor_fixed_set) script.anchor_fixed = s.anchor_fixed;
  script.fail_after = s.fail_after;

  int served = 0;
  if (s.port > 0) {
    std::unique_ptr<halo::AdapterLink> link = halo::accept_tcp_once(s.port);
    served = halo::run_adapter_stub(*link, script);
  } else {
    // stdout carries the protocol; diagnostics go to stderr only.
    halo::FdLink link(0, 1, /*owns=*/false);
    served = halo::run_adapter_stub(link, script);
  }
  std::cerr << "stub: served " << served << " steps\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);

  CLI::App app{"simulator and control loop for error propagation in long reasoning chains"};
  app.require_subcommand(1);
  app.set_version_flag("--version", halo::kToolVersion);

  CommonOpts simulate_opts, halo_opts, sweep_opts, calibrate_opts, compare_opts, correlate_opts;
  add_common(app.add_subcommand("simulate", "open-loop Monte Carlo over seeds"), simulate_opts);
  add_common(app.add_subcommand("halo", "closed-loop (observer + controller) Monte Carlo"),
             halo_opts);
  add_common(app.add_subcommand("sweep", "success-rate phase diagram over length x difficulty"),
             sweep_opts);
  add_common(app.add_subcommand("calibrate", "fit the entropy -> drift boundary"),
             calibrate_opts);
  add_common(app.add_subcommand("compare", "matched-seed open vs closed loop"), compare_opts);
  add_common(app.add_subcommand("correlate", "omega vs true error diagnostics"), correlate_opts);

  HorizonOpts horizon_opts;
  CLI::App* horizon_cmd = app.add_subcommand("horizon", "closed-form critical horizon");
  horizon_cmd->add_option("--lambda", horizon_opts.lambda, "drift exponent")
      ->capture_default_str();
  horizon_cmd->add_option("--sigma2", horizon_opts.sigma2, "per-coordinate noise variance")
      ->capture_default_str();
  horizon_cmd->add_option("--psi", horizon_opts.psi, "variance budget")->capture_default_str();

  StubOpts stub_opts;
  CLI::App* stub_cmd =
      app.add_subcommand("serve-adapter-stub", "scripted generator for the wire protocol");
  stub_cmd->add_option("--port", stub_opts.port, "serve one TCP connection (0 = stdio)")
      ->capture_default_str();
  stub_cmd->add_option("--entropies", stub_opts.entropies, "explicit entropy series")
      ->delimiter(',');
  stub_cmd->add_option("--steps", stub_opts.steps, "ramp length when --entropies is absent")
      ->capture_default_str();
  stub_cmd->add_option("--entropy0", stub_opts.entropy0, "ramp start")->capture_default_str();
  stub_cmd->add_option("--slope", stub_opts.slope, "ramp increment per step")
      ->capture_default_str();
  stub_cmd->add_option("--anchor-prefix", stub_opts.anchor_prefix, "anchor naming prefix")
      ->capture_default_str();
  CLI::Option* fixed =
      stub_cmd->add_option("--anchor-fixed", stub_opts.anchor_fixed,
                           "reply to every rectify with this exact anchor");
  stub_cmd->add_option("--fail-after", stub_opts.fail_after,
                       "close the stream after N step messages (-1 = never)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForVersion& e) {
    std::cout << e.what() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }
  stub_opts.anchor_fixed_set = fixed->count() > 0;

  try {
    if (app.got_subcommand("simulate"))
      return run_scenario_command(halo::Scenario::kOpenLoop, simulate_opts);
    if (app.got_subcommand("halo"))
      return run_scenario_command(halo::Scenario::kHalo, halo_opts);
    if (app.got_subcommand("correlate"))
      return run_scenario_command(halo::Scenario::kCorrelation, correlate_opts);
    if (app.got_subcommand("sweep")) return run_sweep(sweep_opts);
    if (app.got_subcommand("calibrate")) return run_calibrate(calibrate_opts);
    if (app.got_subcommand("compare")) return run_compare(compare_opts);
    if (app.got_subcommand("horizon")) return run_horizon(horizon_opts);
    if (app.got_subcommand("serve-adapter-stub")) return run_stub(stub_opts);
    std::cerr << "error: no subcommand\n";
    return 1;
  } catch (const halo::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
