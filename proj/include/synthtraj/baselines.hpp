#pragma once

#include <cstddef>
#include <string>

#include "synthtraj/geometry.hpp"

namespace synthtraj {

enum class PredictorKind { kConstantVelocity, kLinear, kKalman };

std::string to_string(PredictorKind k);
PredictorKind parse_predictor_kind(const std::string& name);

struct Predictor {
  PredictorKind kind = PredictorKind::kConstantVelocity;
  /// Kalman process noise (white acceleration), m/s^2.
  double sigma_a = 1.0;
  /// Kalman measurement noise, m.
  double sigma_z = 0.1;
  /// Step length in seconds for the Kalman model.
  double dt = 0.1;

  void validate() const;
};

/// Extrapolates `past` (>= 2 points) by `horizon` steps. The result holds
/// only the future points, not the past.
///
/// constant_velocity repeats the last step vector; linear fits x(t), y(t) by
/// least squares over the whole past; kalman filters the past with a
/// constant-velocity model and then propagates without updates.
Trajectory predict(const Predictor& p, const Trajectory& past, std::size_t horizon = 40);

}  // namespace synthtraj
