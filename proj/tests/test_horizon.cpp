#include <doctest.h>

#include <cmath>

#include "halo/error_prop.hpp"
#include "halo/errors.hpp"
#include "halo/horizon.hpp"
#include "halo/io.hpp"

using namespace halo;

TEST_CASE("critical_horizon: inverse of the ten-step geometric trace") {
  // The exact trace after 10 steps of rho = 1.1; its crossing is step 10.
  const double psi = 0.01 * (std::pow(1.21, 10) - 1.0) / 0.21;
  CHECK(critical_horizon({std::log(1.1), 0.01, psi}) == doctest::Approx(10.0).epsilon(1e-12));
  // The commonly quoted 6-digit rounding of that threshold lands there too.
  CHECK(critical_horizon({std::log(1.1), 0.01, 0.272744}) == doctest::Approx(10.0).epsilon(1e-3));
}

TEST_CASE("critical_horizon: diffusive limit as lambda -> 0") {
  CHECK(critical_horizon({1e-9, 1.0, 5.0}) == doctest::Approx(5.0).epsilon(1e-6));
  CHECK(critical_horizon({0.0, 1.0, 5.0}) == 5.0);
}

TEST_CASE("critical_horizon: overwhelming noise floor collapses the horizon") {
  CHECK(critical_horizon({0.1, 1e12, 1.0}) < 1e-10);
}

TEST_CASE("critical_horizon: rejects invalid parameter domains") {
  CHECK_THROWS_AS((void)critical_horizon({0.1, 0.0, 1.0}), ValidationError);
  CHECK_THROWS_AS((void)critical_horizon({0.1, 0.01, 0.0}), ValidationError);
  CHECK_THROWS_AS((void)critical_horizon({0.1, 0.01, -1.0}), ValidationError);
}

TEST_CASE("critical_horizon: monotone in psi, sigma2 and lambda on a 5x5x5 grid") {
  const double lambdas[] = {0.02, 0.05, 0.1, 0.2, 0.3};
  const double sigma2s[] = {0.001, 0.005, 0.01, 0.05, 0.1};
  const double psis[] = {0.1, 0.3, 1.0, 3.0, 10.0};
  const double h = 1e-6;
  for (double l : lambdas)
    for (double s : sigma2s)
      for (double p : psis) {
        const double base = critical_horizon({l, s, p});
        CHECK(critical_horizon({l, s, p * (1.0 + h)}) > base);        // dN*/dpsi > 0
        CHECK(critical_horizon({l, s * (1.0 + h), p}) < base);        // dN*/dsigma2 < 0
        if (p == s) {
          // Degenerate ray psi == sigma2: N* == 1 independent of lambda.
          CHECK(base == doctest::Approx(1.0).epsilon(1e-12));
          CHECK(critical_horizon({l * (1.0 + h), s, p}) ==
                doctest::Approx(base).epsilon(1e-12));
        } else {
          CHECK(critical_horizon({l * (1.0 + h), s, p}) < base);      // dN*/dlambda < 0
        }
      }
}

TEST_CASE("horizon_consistency: closed form and recursion stay within one step") {
  const double lambdas[] = {0.02, 0.05, 0.1, 0.2, 0.3};
  const double sigma2s[] = {0.001, 0.005, 0.01, 0.05, 0.1};
  const double psis[] = {0.1, 0.3, 1.0, 3.0, 10.0};
  for (double l : lambdas)
    for (double s : sigma2s)
      for (double p : psis) {
        HorizonReport report = horizon_consistency({l, s, p});
        CHECK(report.gap <= 1.0);
        CHECK(report.crossing >= 1);
        // crossing is the first integer n with trace_bound(n) >= psi
        CHECK(trace_bound(report.crossing, {std::exp(l), s, 0.0}) >= p);
        if (report.crossing > 1)
          CHECK(trace_bound(report.crossing - 1, {std::exp(l), s, 0.0}) < p);
      }
}

TEST_CASE("horizon_consistency: first-step breach when psi is below sigma2") {
  HorizonReport report = horizon_consistency({0.1, 0.5, 0.25});
  CHECK(report.crossing == 1);
  CHECK(report.n_star_ceil == 1);
}

TEST_CASE("horizon_consistency: spot check at lambda 0.3, sigma2 0.1, psi 10") {
  HorizonReport report = horizon_consistency({0.3, 0.1, 10.0});
  CHECK(report.gap <= 1.0);
}

TEST_CASE("phase_sweep: noiseless runs always succeed") {
  PhaseSweepConfig config;
  config.d = 3;
  config.sigma2 = 0.0;
  config.lengths = {2, 5, 10, 20};
  config.lambdas = {0.05, 0.2};
  config.n_seeds = 30;
  config.base_seed = 9;
  PhaseGrid grid = phase_sweep(config);
  for (const auto& row : grid.success_rates)
    for (double rate : row) CHECK(rate == 1.0);
  for (const auto& row : grid.diverged)
    for (int dead : row) CHECK(dead == 0);
}

TEST_CASE("phase_sweep: success decays through 50% near the matched-threshold horizon") {
  PhaseSweepConfig config;
  config.d = 4;
  config.sigma2 = 0.01;
  config.lambdas = {0.15};
  config.n_seeds = 300;
  config.base_seed = 31;
  config.jobs = 4;
  const double n_star =
      critical_horizon({config.lambdas[0], config.sigma2, matched_psi(config.success_tol)});
  for (int n = std::max(1, int(n_star / 2)); n <= int(2 * n_star) + 1; ++n)
    config.lengths.push_back(n);
  PhaseGrid grid = phase_sweep(config);

  auto half = half_success_length(grid, 0);
  REQUIRE(half.has_value());
  CHECK(std::abs(*half - n_star) <= 2.0);
}

TEST_CASE("phase_sweep: rates non-increasing in chain length up to Monte Carlo slack") {
  PhaseSweepConfig config;
  config.d = 4;
  config.sigma2 = 0.01;
  config.lambdas = {0.1, 0.25};
  config.lengths = {4, 8, 12, 16, 20, 26, 32};
  config.n_seeds = 200;
  config.base_seed = 17;
  config.jobs = 4;
  PhaseGrid grid = phase_sweep(config);
  for (const auto& row : grid.success_rates)
    for (std::size_t c = 0; c + 1 < row.size(); ++c) CHECK(row[c + 1] <= row[c] + 0.03);
}

TEST_CASE("phase_sweep: higher difficulty never helps at fixed length") {
  PhaseSweepConfig config;
  config.d = 4;
  config.sigma2 = 0.01;
  config.lambdas = {0.05, 0.15, 0.3};
  config.lengths = {10, 20};
  config.n_seeds = 200;
  config.base_seed = 23;
  config.jobs = 2;
  PhaseGrid grid = phase_sweep(config);
  for (std::size_t c = 0; c < grid.lengths.size(); ++c)
    for (std::size_t r = 0; r + 1 < grid.lambdas.size(); ++r)
      CHECK(grid.success_rates[r + 1][c] <= grid.success_rates[r][c] + 0.03);
}

TEST_CASE("phase_sweep: deterministic grid independent of the worker count") {
  PhaseSweepConfig config;
  config.d = 2;
  config.sigma2 = 0.01;
  config.lambdas = {0.1, 0.2};
  config.lengths = {5, 10, 15};
  config.n_seeds = 50;
  config.base_seed = 77;
  config.jobs = 1;
  PhaseGrid serial = phase_sweep(config);
  config.jobs = 8;
  PhaseGrid parallel = phase_sweep(config);
  CHECK(serial.success_rates == parallel.success_rates);
  CHECK(phase_grid_to_csv(serial) == phase_grid_to_csv(parallel));
}

TEST_CASE("phase_sweep: validates its configuration") {
  PhaseSweepConfig config;
  config.lengths = {};
  config.lambdas = {0.1};
  CHECK_THROWS_AS((void)phase_sweep(config), ValidationError);
  config.lengths = {5};
  config.lambdas = {};
  CHECK_THROWS_AS((void)phase_sweep(config), ValidationError);
  config.lambdas = {0.1};
  config.n_seeds = 0;
  CHECK_THROWS_AS((void)phase_sweep(config), ValidationError);
}

TEST_CASE("half_success_length: interpolates the first 0.5 crossing") {
  PhaseGrid grid;
  grid.lengths = {10, 20, 30};
  grid.lambdas = {0.1, 0.1};
  grid.success_rates = {{0.9, 0.3, 0.1}, {0.9, 0.8, 0.7}};
  grid.diverged = {{0, 0, 0}, {0, 0, 0}};
  auto half = half_success_length(grid, 0);
  REQUIRE(half.has_value());
  // Linear interpolation between (10, 0.9) and (20, 0.3): 0.5 at 16.666...
  CHECK(*half == doctest::Approx(10.0 + (0.4 / 0.6) * 10.0).epsilon(1e-12));
  CHECK(!half_success_length(grid, 1).has_value());
  CHECK_THROWS_AS((void)half_success_length(grid, 2), ValidationError);
}

TEST_CASE("matched_psi: the per-coordinate variance level of the success band") {
  CHECK(matched_psi(0.6728) == doctest::Approx(0.6728 * 0.6728));
}
