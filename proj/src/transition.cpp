#include "halo/transition.hpp"

#include <cmath>

#include "halo/dynamics.hpp"
#include "halo/errors.hpp"
#include "halo/rng.hpp"

namespace halo {

namespace {

void check_dim(int d) {
  if (d < 1) throw ValidationError("TransitionMap: dimension must be >= 1");
}

Mat seeded_gaussian_matrix(int d, std::uint64_t seed) {
  Rng rng(seed);
  Mat m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.next_gaussian();
  return m;
}

}  // namespace

TransitionMap TransitionMap::linear(Mat J) {
  if (J.rows() != J.cols() || J.rows() < 1)
    throw ValidationError("TransitionMap::linear: J must be square and non-empty");
  int d = static_cast<int>(J.rows());
  return TransitionMap(d, LinearResidual{std::move(J)});
}

TransitionMap TransitionMap::linear_isotropic(int d, double rho) {
  check_dim(d);
  if (!(rho >= 0.0)) throw ValidationError("TransitionMap::linear_isotropic: rho must be >= 0");
  Mat J = (rho - 1.0) * Mat::Identity(d, d);
  return TransitionMap(d, LinearResidual{std::move(J)});
}

TransitionMap TransitionMap::linear_rotation(int d, double rho, std::uint64_t seed) {
  check_dim(d);
  if (!(rho >= 0.0)) throw ValidationError("TransitionMap::linear_rotation: rho must be >= 0");
  // Random rotation: QR of a Gaussian matrix, sign-fixed so the factorization
  // is unique (R diagonal positive) and the result deterministic per seed.
  Mat g = seeded_gaussian_matrix(d, Rng::derive(seed, kStreamInit));
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i)
    if (r(i, i) < 0.0) q.col(i) = -q.col(i);
  Mat J = rho * q - Mat::Identity(d, d);
  return TransitionMap(d, LinearResidual{std::move(J)});
}

TransitionMap TransitionMap::tanh_net(int d, double lipschitz, std::uint64_t seed) {
  check_dim(d);
  if (!(lipschitz > 0.0)) throw ValidationError("TransitionMap::tanh_net: lipschitz must be > 0");
  Mat w = seeded_gaussian_matrix(d, Rng::derive(seed, kStreamInit)) / std::sqrt(double(d));
  const double norm = spectral_norm(w).value;
  if (norm <= 0.0) throw ValidationError("TransitionMap::tanh_net: degenerate seeded weights");
  w *= lipschitz / norm;  // clip: ||W||_2 == lipschitz exactly (up to fp)
  return TransitionMap(d, RandomTanhNet{std::move(w)});
}

TransitionMap TransitionMap::switched_isotropic(int d, const std::vector<double>& rhos,
                                                int period) {
  check_dim(d);
  std::vector<Mat> segments;
  segments.reserve(rhos.size());
  for (double rho : rhos) segments.push_back((rho - 1.0) * Mat::Identity(d, d));
  return switched(std::move(segments), period);
}

TransitionMap TransitionMap::switched(std::vector<Mat> segments, int period) {
  if (segments.empty()) throw ValidationError("TransitionMap::switched: need >= 1 segment");
  if (period < 1) throw ValidationError("TransitionMap::switched: period must be >= 1");
  int d = static_cast<int>(segments.front().rows());
  check_dim(d);
  for (const Mat& j : segments)
    if (j.rows() != d || j.cols() != d)
      throw ValidationError("TransitionMap::switched: segment dimension mismatch");
  return TransitionMap(d, PiecewiseSwitched{std::move(segments), period});
}

Vec TransitionMap::evaluate(const Vec& s, long t) const {
  if (s.size() != d_) throw ValidationError("TransitionMap::evaluate: state dimension mismatch");
  if (const auto* lin = std::get_if<LinearResidual>(&impl_)) return lin->J * s;
  if (const auto* net = std::get_if<RandomTanhNet>(&impl_))
    return net->W * s.array().tanh().matrix();
  const auto& sw = std::get<PiecewiseSwitched>(impl_);
  if (t < 0) throw ValidationError("TransitionMap::evaluate: negative time on switched map");
  std::size_t k = static_cast<std::size_t>(t / sw.period) % sw.segments.size();
  return sw.segments[k] * s;
}

Mat TransitionMap::jacobian(const Vec& s, long t) const {
  if (s.size() != d_) throw ValidationError("TransitionMap::jacobian: state dimension mismatch");
  if (const auto* lin = std::get_if<LinearResidual>(&impl_)) return lin->J;
  if (const auto* net = std::get_if<RandomTanhNet>(&impl_)) {
    // d/dS [W tanh(S)] = W * diag(1 - tanh^2(s_i))
    Vec sech2 = (1.0 - s.array().tanh().square()).matrix();
    return net->W * sech2.asDiagonal();
  }
  const auto& sw = std::get<PiecewiseSwitched>(impl_);
  if (t < 0) throw ValidationError("TransitionMap::jacobian: negative time on switched map");
  std::size_t k = static_cast<std::size_t>(t / sw.period) % sw.segments.size();
  return sw.segments[k];
}

const char* TransitionMap::family_name() const {
  if (std::holds_alternative<LinearResidual>(impl_)) return "linear_residual";
  if (std::holds_alternative<RandomTanhNet>(impl_)) return "random_tanh_net";
  return "piecewise_switched";
}

}  // namespace halo
