#include "synthtraj/baselines.hpp"

#include <array>
#include <cmath>

#include "synthtraj/errors.hpp"

namespace synthtraj {

std::string to_string(PredictorKind k) {
  switch (k) {
    case PredictorKind::kConstantVelocity: return "constant_velocity";
    case PredictorKind::kLinear: return "linear";
    case PredictorKind::kKalman: return "kalman";
  }
  return "constant_velocity";
}

PredictorKind parse_predictor_kind(const std::string& name) {
  if (name == "constant_velocity" || name == "cv") return PredictorKind::kConstantVelocity;
  if (name == "linear") return PredictorKind::kLinear;
  if (name == "kalman") return PredictorKind::kKalman;
  throw PreconditionError("unknown baseline '" + name + "'");
}

void Predictor::validate() const {
  if (!(sigma_a > 0.0) || !(sigma_z > 0.0) || !(dt > 0.0)) {
    throw PreconditionError("predictor noise and dt must be positive");
  }
}

namespace {

Trajectory constant_velocity(const Trajectory& past, std::size_t horizon) {
  const std::size_t n = past.size();
  const Vec2 step = past[n - 1] - past[n - 2];
  Trajectory out;
  out.rate_hz = past.rate_hz;
  for (std::size_t k = 1; k <= horizon; ++k) out.points.push_back(past[n - 1] + static_cast<double>(k) * step);
  return out;
}

Trajectory linear(const Trajectory& past, std::size_t horizon) {
  // OLS on centered time so the fit is well conditioned.
  const std::size_t n = past.size();
  const double t_mean = static_cast<double>(n - 1) / 2.0;
  Vec2 mean{};
  for (const auto& p : past.points) mean = mean + p;
  mean = (1.0 / static_cast<double>(n)) * mean;
  double stt = 0.0;
  Vec2 sty{};
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - t_mean;
    stt += dt * dt;
    sty = sty + dt * (past[i] - mean);
  }
  const Vec2 slope = (1.0 / stt) * sty;
  Trajectory out;
  out.rate_hz = past.rate_hz;
  for (std::size_t k = 1; k <= horizon; ++k) {
    const double t = static_cast<double>(n - 1 + k) - t_mean;
    out.points.push_back(mean + t * slope);
  }
  return out;
}

// One axis of the constant-velocity filter: state (position, velocity).
// Both axes share the same covariance since the gain does not depend on data.
struct Axis {
  double pos = 0.0;
  double vel = 0.0;
};

struct Cov {
  double pp = 0.0, pv = 0.0, vv = 0.0;
};

Trajectory kalman(const Predictor& cfg, const Trajectory& past, std::size_t horizon) {
  const double dt = cfg.dt;
  const double q = cfg.sigma_a * cfg.sigma_a;
  const double r = cfg.sigma_z * cfg.sigma_z;
  // Discretized white-acceleration process noise.
  const double q_pp = q * dt * dt * dt * dt / 4.0;
  const double q_pv = q * dt * dt * dt / 2.0;
  const double q_vv = q * dt * dt;

  std::array<Axis, 2> s{};
  s[0] = {past[1].x, (past[1].x - past[0].x) / dt};
  s[1] = {past[1].y, (past[1].y - past[0].y) / dt};
  Cov c{r, r / dt, 2.0 * r / (dt * dt)};

  auto predict_step = [&] {
    for (auto& a : s) a.pos += dt * a.vel;
    const Cov p = c;
    c.pp = p.pp + 2.0 * dt * p.pv + dt * dt * p.vv + q_pp;
    c.pv = p.pv + dt * p.vv + q_pv;
    c.vv = p.vv + q_vv;
  };

  for (std::size_t i = 2; i < past.size(); ++i) {
    predict_step();
    const double sden = c.pp + r;
    const double k_p = c.pp / sden;
    const double k_v = c.pv / sden;
    const std::array<double, 2> z{past[i].x, past[i].y};
    for (std::size_t a = 0; a < 2; ++a) {
      const double innov = z[a] - s[a].pos;
      s[a].pos += k_p * innov;
      s[a].vel += k_v * innov;
    }
    const Cov p = c;
    c.pp = (1.0 - k_p) * p.pp;
    c.pv = (1.0 - k_p) * p.pv;
    c.vv = p.vv - k_v * p.pv;
  }

  Trajectory out;
  out.rate_hz = past.rate_hz;
  for (std::size_t k = 0; k < horizon; ++k) {
    predict_step();
    out.points.push_back({s[0].pos, s[1].pos});
  }
  return out;
}

}  // namespace

Trajectory predict(const Predictor& p, const Trajectory& past, std::size_t horizon) {
  p.validate();
  if (past.size() < 2) throw PreconditionError("baseline needs at least 2 past points");
  for (const auto& pt : past.points) {
    if (!std::isfinite(pt.x) || !std::isfinite(pt.y)) throw PreconditionError("non-finite past point");
  }
  switch (p.kind) {
    case PredictorKind::kConstantVelocity: return constant_velocity(past, horizon);
    case PredictorKind::kLinear: return linear(past, horizon);
    case PredictorKind::kKalman: return kalman(p, past, horizon);
  }
  throw PreconditionError("unknown predictor kind");
}

}  // namespace synthtraj
