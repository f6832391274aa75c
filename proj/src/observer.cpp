#include "halo/observer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "halo/errors.hpp"

namespace halo {

namespace {

// Entropy of the geometric-logit softmax p_i proportional to r^i, i in [0,n).
// Strictly increasing in r on (0,1): r -> 0 is one-hot, r -> 1 is uniform.
double geometric_entropy(double r, int n) {
  // H = ln Z + (1-r) / Z * sum i r^i ... computed directly for robustness.
  double z = 0.0;
  double p = 1.0;
  for (int i = 0; i < n; ++i, p *= r) z += p;
  double h = 0.0;
  p = 1.0;
  for (int i = 0; i < n; ++i, p *= r) {
    const double q = p / z;
    if (q > 0.0) h -= q * std::log(q);
  }
  return h;
}

// Fills `row` with the geometric softmax of ratio r.
void geometric_row(double r, int n, std::vector<double>& row) {
  row.resize(n);
  double z = 0.0;
  double p = 1.0;
  for (int i = 0; i < n; ++i, p *= r) {
    row[i] = p;
    z += p;
  }
  for (int i = 0; i < n; ++i) row[i] /= z;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void AttentionFrame::validate() const {
  if (layers < 1 || heads < 1) throw ValidationError("AttentionFrame: layers/heads must be >= 1");
  if (context_len < 2) throw ValidationError("AttentionFrame: context_len must be >= 2");
  if (rows.size() != static_cast<std::size_t>(layers) * heads)
    throw ValidationError("AttentionFrame: expected layers*heads rows");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != static_cast<std::size_t>(context_len))
      throw ValidationError("AttentionFrame: row " + std::to_string(r) + " has wrong length");
    double sum = 0.0;
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      if (!(rows[r][i] >= 0.0))
        throw ValidationError("AttentionFrame: row " + std::to_string(r) + " entry " +
                              std::to_string(i) + " is negative");
      sum += rows[r][i];
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ValidationError("AttentionFrame: row " + std::to_string(r) + " sums to " +
                            std::to_string(sum));
  }
}

void ObserverCalibration::validate() const {
  if (!std::isfinite(alpha) || alpha == 0.0)
    throw ValidationError("ObserverCalibration: alpha must be finite and nonzero");
  if (!std::isfinite(beta)) throw ValidationError("ObserverCalibration: beta must be finite");
}

double shannon_entropy(const std::vector<double>& p) {
  if (p.empty()) throw ValidationError("shannon_entropy: empty distribution");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]) || p[i] < -1e-12)
      throw ValidationError("shannon_entropy: entry " + std::to_string(i) +
                            " is not a probability");
    sum += p[i];
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw ValidationError("shannon_entropy: distribution sums to " + std::to_string(sum));
  double h = 0.0;
  for (double q : p)
    if (q > 0.0) h -= q * std::log(q);
  return h;
}

double mean_attention_entropy(const AttentionFrame& frame) {
  frame.validate();
  double acc = 0.0;
  for (const auto& row : frame.rows) acc += shannon_entropy(row);
  return acc / static_cast<double>(frame.rows.size());
}

double drift_proxy(double mean_entropy, const ObserverCalibration& cal) {
  cal.validate();
  if (!std::isfinite(mean_entropy) || mean_entropy < 0.0)
    throw ValidationError("drift_proxy: mean_entropy must be finite and >= 0");
  return cal.beta + cal.alpha * mean_entropy;
}

AttentionFrame synth_attention(double lambda_true, const ObserverCalibration& cal,
                               double obs_noise, Rng& rng, int context_len, int layers,
                               int heads) {
  cal.validate();
  if (context_len < 2) throw ValidationError("synth_attention: context_len must be >= 2");
  if (layers < 1 || heads < 1) throw ValidationError("synth_attention: layers/heads must be >= 1");
  if (!(obs_noise >= 0.0)) throw ValidationError("synth_attention: obs_noise must be >= 0");

  const double h_max = std::log(static_cast<double>(context_len));
  const double noiseless = (lambda_true - cal.beta) / cal.alpha;
  if (noiseless > h_max + 1e-12)
    throw FeasibilityError("synth_attention: required entropy " + std::to_string(noiseless) +
                           " exceeds ln(context_len) = " + std::to_string(h_max) +
                           "; increase context_len");
  // Observation noise is always drawn (stream accounting), then the target is
  // clamped into the representable band.
  const double eps = obs_noise * rng.next_gaussian();
  const double target = std::clamp(noiseless + eps, 0.0, h_max);

  AttentionFrame frame;
  frame.layers = layers;
  frame.heads = heads;
  frame.context_len = context_len;
  frame.rows.resize(static_cast<std::size_t>(layers) * heads);

  std::vector<double> base(context_len);
  if (target <= 0.0) {
    std::fill(base.begin(), base.end(), 0.0);
    base[0] = 1.0;  // one-hot: entropy exactly 0
  } else if (target >= h_max) {
    std::fill(base.begin(), base.end(), 1.0 / context_len);  // uniform: exactly ln n
  } else {
    // Bisection on the geometric ratio r in (0,1); entropy is monotone in r.
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double h = geometric_entropy(mid, context_len);
      if (std::abs(h - target) <= 1e-9) {
        lo = hi = mid;
        break;
      }
      (h < target ? lo : hi) = mid;
      if (hi - lo <= 1e-15) break;
    }
    geometric_row(0.5 * (lo + hi), context_len, base);
  }

  // Every row is a cyclic shift of the base pattern: distinct distributions,
  // identical entropy, so the mean entropy equals the per-row target.
  for (std::size_t r = 0; r < frame.rows.size(); ++r) {
    auto& row = frame.rows[r];
    row.resize(context_len);
    const int shift = static_cast<int>(r) % context_len;
    for (int i = 0; i < context_len; ++i) row[(i + shift) % context_len] = base[i];
  }
  return frame;
}

CalibratedObserver calibrate(const std::vector<DriftSample>& samples,
                             const CalibrationConfig& config) {
  if (samples.size() < 2) throw ValidationError("calibrate: need at least 2 samples");
  if (!(config.l2 >= 0.0)) throw ValidationError("calibrate: l2 must be >= 0");
  if (config.max_iters < 1) throw ValidationError("calibrate: max_iters must be >= 1");

  std::size_t positives = 0;
  for (const auto& s : samples) {
    if (!std::isfinite(s.entropy) || s.entropy < 0.0)
      throw ValidationError("calibrate: sample entropies must be finite and >= 0");
    if (s.unstable) ++positives;
  }
  if (positives == 0 || positives == samples.size())
    throw CalibrationError("calibrate: labels are single-class; boundary unidentifiable", 0.0, 0.0,
                           std::log(2.0));

  const double n = static_cast<double>(samples.size());
  double w = 0.0, b = 0.0;
  auto loss_at = [&](double wv, double bv) {
    double loss = 0.0;
    for (const auto& s : samples) {
      const double z = wv * s.entropy + bv;
      // log(1 + e^z) computed stably on both tails
      const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      loss += softplus - (s.unstable ? z : 0.0);
    }
    return loss / n;
  };

  bool converged = false;
  for (int it = 0; it < config.max_iters; ++it) {
    // Gradient and Hessian of the penalized NLL in (w, b).
    double gw = config.l2 * w, gb = 0.0;
    double hww = config.l2, hwb = 0.0, hbb = 0.0;
    for (const auto& s : samples) {
      const double p = sigmoid(w * s.entropy + b);
      const double r = p * (1.0 - p);
      const double err = p - (s.unstable ? 1.0 : 0.0);
      gw += err * s.entropy;
      gb += err;
      hww += r * s.entropy * s.entropy;
      hwb += r * s.entropy;
      hbb += r;
    }
    const double det = hww * hbb - hwb * hwb;
    if (!(std::abs(det) > 1e-300))
      throw CalibrationError("calibrate: singular Hessian", w, b, loss_at(w, b));
    const double dw = (hbb * gw - hwb * gb) / det;
    const double db = (hww * gb - hwb * gw) / det;
    w -= dw;
    b -= db;
    if (std::abs(dw) + std::abs(db) <= config.tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw CalibrationError("calibrate: Newton iteration did not converge", w, b, loss_at(w, b));
  if (!(w > 0.0) && !(w < 0.0))
    throw CalibrationError("calibrate: flat fit, boundary unidentifiable", w, b, loss_at(w, b));

  CalibratedObserver out;
  out.fit.n_samples = static_cast<int>(samples.size());
  out.fit.w = w;
  out.fit.b = b;
  out.fit.log_loss = loss_at(w, b);
  out.fit.boundary_entropy = -b / w;
  const double alpha = config.reference_slope > 0.0 ? config.reference_slope : w;
  out.calibration.alpha = alpha;
  // beta as -(alpha*boundary) makes drift_proxy(boundary) == 0 exactly.
  out.calibration.beta = -(alpha * out.fit.boundary_entropy);
  return out;
}

}  // namespace halo
