#include "halo/horizon.hpp"

#include <cmath>

#include "halo/error_prop.hpp"
#include "halo/errors.hpp"
#include "halo/parallel.hpp"
#include "halo/rng.hpp"

namespace halo {

void HorizonParams::validate() const {
  if (!std::isfinite(lambda)) throw ValidationError("HorizonParams: lambda must be finite");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw ValidationError("HorizonParams: sigma2 must be finite and > 0");
  if (!(psi > 0.0) || !std::isfinite(psi))
    throw ValidationError("HorizonParams: psi must be finite and > 0");
}

double critical_horizon(const HorizonParams& params) {
  params.validate();
  const double two_lambda = 2.0 * params.lambda;
  if (std::abs(params.lambda) < 1e-9) {
    // Diffusive limit: variance grows linearly, crossing at psi / sigma2.
    return params.psi / params.sigma2;
  }
  const double ratio = params.psi * std::expm1(two_lambda) / params.sigma2;
  if (ratio <= -1.0)
    throw ValidationError("critical_horizon: budget unreachable for this contraction");
  return std::log1p(ratio) / two_lambda;
}

HorizonReport horizon_consistency(const HorizonParams& params) {
  params.validate();
  HorizonReport report;
  report.n_star = critical_horizon(params);
  report.n_star_ceil = std::max(1, static_cast<int>(std::ceil(report.n_star)));

  GrowthBoundParams growth{std::exp(params.lambda), params.sigma2, 0.0};
  // Walk the recursion directly instead of materializing a series: the
  // crossing is guaranteed within a couple of steps of ceil(N*).
  const int limit = report.n_star_ceil + 8;
  double trace = 0.0;
  report.crossing = 0;
  for (int n = 1; n <= limit; ++n) {
    trace = (growth.rho * trace) * growth.rho + growth.sigma2;
    if (trace >= params.psi) {
      report.crossing = n;
      break;
    }
  }
  if (report.crossing == 0)
    throw ValidationError("horizon_consistency: recursion failed to cross psi near N*");
  report.gap = std::abs(report.n_star - static_cast<double>(report.crossing));
  return report;
}

PhaseGrid phase_sweep(const PhaseSweepConfig& config) {
  if (config.d < 1) throw ValidationError("phase_sweep: d must be >= 1");
  if (!(config.sigma2 >= 0.0)) throw ValidationError("phase_sweep: sigma2 must be >= 0");
  if (config.lengths.empty()) throw ValidationError("phase_sweep: lengths must be non-empty");
  if (config.lambdas.empty()) throw ValidationError("phase_sweep: lambdas must be non-empty");
  for (int n : config.lengths)
    if (n < 1) throw ValidationError("phase_sweep: lengths must be >= 1");
  if (config.n_seeds < 1) throw ValidationError("phase_sweep: n_seeds must be >= 1");
  if (!(config.success_tol > 0.0)) throw ValidationError("phase_sweep: success_tol must be > 0");

  PhaseGrid grid;
  grid.lengths = config.lengths;
  grid.lambdas = config.lambdas;
  grid.n_seeds = config.n_seeds;
  grid.success_tol = config.success_tol;
  grid.d = config.d;
  grid.sigma2 = config.sigma2;
  const std::size_t rows = config.lambdas.size();
  const std::size_t cols = config.lengths.size();
  grid.success_rates.assign(rows, std::vector<double>(cols, 0.0));
  grid.diverged.assign(rows, std::vector<int>(cols, 0));

  const double band = config.success_tol * std::sqrt(static_cast<double>(config.d));
  const Vec s0 = Vec::Ones(config.d);

  // One task per cell; each cell derives its own seed block so the outcome is
  // identical no matter how cells land on workers.
  parallel_for(rows * cols, config.jobs, [&](std::size_t cell) {
    const std::size_t row = cell / cols;
    const std::size_t col = cell % cols;
    const double rho = std::exp(config.lambdas[row]);
    const TransitionMap map = TransitionMap::linear_isotropic(config.d, rho);
    const int n = config.lengths[col];
    int ok = 0;
    int dead = 0;
    const std::uint64_t cell_seed = Rng::derive(config.base_seed, 7919ULL * row + col);
    for (int i = 0; i < config.n_seeds; ++i) {
      NoiseModel noise{config.sigma2, Rng::derive(cell_seed, static_cast<std::uint64_t>(i))};
      try {
        Trajectory traj = simulate_open_loop(map, s0, noise, n);
        if (traj.delta_norm(n) <= band) ++ok;
      } catch (const DivergenceError&) {
        ++dead;  // counted as failure, flagged separately
      }
    }
    grid.success_rates[row][col] = static_cast<double>(ok) / config.n_seeds;
    grid.diverged[row][col] = dead;
  });
  return grid;
}

std::optional<double> half_success_length(const PhaseGrid& grid, std::size_t row) {
  if (row >= grid.lambdas.size()) throw ValidationError("half_success_length: row out of range");
  const auto& rates = grid.success_rates[row];
  for (std::size_t c = 0; c + 1 < rates.size(); ++c) {
    const double a = rates[c];
    const double b = rates[c + 1];
    if ((a >= 0.5 && b < 0.5) || (a > 0.5 && b <= 0.5)) {
      const double n1 = grid.lengths[c];
      const double n2 = grid.lengths[c + 1];
      if (a == b) return 0.5 * (n1 + n2);
      return n1 + (a - 0.5) / (a - b) * (n2 - n1);
    }
  }
  return std::nullopt;
}

}  // namespace halo
