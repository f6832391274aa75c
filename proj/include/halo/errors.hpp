#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace halo {

// Base class for all library errors. Subtypes distinguish caller mistakes
// (ValidationError) from runtime conditions discovered mid-computation.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad arguments, malformed configs, schema violations. CLI maps this to exit code 1.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

// A state stopped being finite during integration. Carries where and how large.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, double state_norm)
      : Error("state diverged (non-finite) at step " + std::to_string(step) +
              ", last finite norm " + std::to_string(state_norm)),
        step(step),
        state_norm(state_norm) {}
  std::size_t step;
  double state_norm;
};

// Tangent vector collapsed to zero norm during exponent estimation.
class DegenerateDirectionError : public Error {
 public:
  explicit DegenerateDirectionError(std::size_t step)
      : Error("tangent direction collapsed to zero at step " + std::to_string(step)), step(step) {}
  std::size_t step;
};

// Requested observation target cannot be represented (e.g. context too short).
class FeasibilityError : public Error {
 public:
  explicit FeasibilityError(const std::string& what) : Error(what) {}
};

// Calibration fit failed (degenerate labels, non-convergence). Carries diagnostics.
class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& what, double last_w, double last_b, double last_loss)
      : Error(what), last_w(last_w), last_b(last_b), last_loss(last_loss) {}
  double last_w;
  double last_b;
  double last_loss;
};

// Wire-protocol failures when talking to an external generation adapter:
// premature EOF, malformed line, unexpected message type, version mismatch.
class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what) : Error(what) {}
};

}  // namespace halo
