#pragma once

#include <cstdint>
#include <vector>

#include "halo/rng.hpp"
#include "halo/types.hpp"

namespace halo {

// One decode step's attention snapshot: layers x heads rows, each a
// distribution over context_len positions.
struct AttentionFrame {
  int layers = 0;
  int heads = 0;
  int context_len = 0;
  // rows.size() == layers*heads, each row sums to 1 with entries >= 0.
  std::vector<std::vector<double>> rows;

  void validate() const;  // throws ValidationError naming the offending row
};

// Affine map from mean attention entropy to a local drift estimate:
// drift = beta + alpha * entropy. boundary() is the entropy at which the
// estimate changes sign.
struct ObserverCalibration {
  double alpha = 0.85;
  double beta = -2.5;

  double boundary() const { return -beta / alpha; }
  void validate() const;
};

// Fit diagnostics attached to a calibration produced by calibrate().
struct CalibrationFit {
  int n_samples = 0;
  double log_loss = 0.0;          // mean negative log-likelihood at the optimum
  double boundary_entropy = 0.0;  // -b/w of the logistic fit
  double w = 0.0;                 // raw logistic weight (scale is data-dependent)
  double b = 0.0;
};

struct CalibratedObserver {
  ObserverCalibration calibration;
  CalibrationFit fit;
};

// Labeled observation for calibration: the mean entropy seen at some step and
// whether that step later proved unstable.
struct DriftSample {
  double entropy = 0.0;
  bool unstable = false;
};

struct CalibrationConfig {
  double l2 = 1e-3;              // ridge penalty on the slope (not the intercept)
  int max_iters = 100;
  double tol = 1e-10;            // Newton step-size convergence threshold
  double reference_slope = 0.0;  // > 0: pin alpha to this value; else alpha = w
};

// Shannon entropy of a distribution in nats, with 0*ln(0) = 0. Validates that
// p is a distribution (entries >= -1e-12, sum within 1e-6 of 1) and names the
// offending index otherwise.
double shannon_entropy(const std::vector<double>& p);

// Mean of shannon_entropy over all rows of the frame.
double mean_attention_entropy(const AttentionFrame& frame);

double drift_proxy(double mean_entropy, const ObserverCalibration& cal);

// Generates a frame whose mean entropy hits
//   clamp((lambda_true - beta)/alpha + eps, 0, ln(context_len)),
// eps ~ N(0, obs_noise^2) drawn from `rng`. Rows are geometric-logit softmax
// distributions solved to the target entropy by bisection (within 1e-6); each
// row is a cyclic shift of the previous one, which changes the distribution
// but not its entropy. A *noiseless* target above ln(context_len) means the
// context cannot represent the requested dispersion: FeasibilityError.
AttentionFrame synth_attention(double lambda_true, const ObserverCalibration& cal,
                               double obs_noise, Rng& rng, int context_len, int layers = 2,
                               int heads = 2);

// Logistic regression P(unstable | H) = sigmoid(w*H + b) by Newton/IRLS.
// The decision boundary -b/w is the well-identified quantity; the returned
// calibration uses alpha = config.reference_slope if given (else the raw w)
// and beta = -(alpha * boundary), which makes drift_proxy(boundary) == 0
// exact. Throws CalibrationError when labels are single-class or the fit
// fails to converge (carrying the last iterate and loss).
CalibratedObserver calibrate(const std::vector<DriftSample>& samples,
                             const CalibrationConfig& config = {});

}  // namespace halo
