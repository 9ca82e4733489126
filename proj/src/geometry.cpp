#include "synthtraj/geometry.hpp"

#include <string>

#include "synthtraj/errors.hpp"

namespace synthtraj {

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

void Trajectory::validate() const {
  if (points.size() < 2) throw PreconditionError("trajectory needs at least 2 points");
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) throw PreconditionError("trajectory rate must be positive");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y)) {
      throw PreconditionError("non-finite coordinate at point " + std::to_string(i));
    }
  }
}

Vec2 to_world(const Pose& frame, Vec2 local) {
  return frame.position + rotate(local, frame.heading - kHeadingUp);
}

Vec2 to_local(const Pose& frame, Vec2 world) {
  return rotate(world - frame.position, kHeadingUp - frame.heading);
}

std::vector<double> headings(const Trajectory& t) {
  const std::size_t n = t.size();
  std::vector<double> h(n, kHeadingUp);
  std::optional<double> current;
  std::size_t first_defined = n;
  for (std::size_t k = 1; k < n; ++k) {
    const Vec2 d = t[k] - t[k - 1];
    if (d.x != 0.0 || d.y != 0.0) {
      current = std::atan2(d.y, d.x);
      if (first_defined == n) first_defined = k;
    }
    if (current) h[k] = *current;
  }
  if (first_defined < n) {
    for (std::size_t k = 0; k < first_defined; ++k) h[k] = h[first_defined];
  }
  return h;
}

double heading_at(const Trajectory& t, std::size_t index) {
  if (index >= t.size()) throw PreconditionError("heading index out of range");
  return headings(t)[index];
}

std::vector<PolarOffset> to_offsets(const Trajectory& t, double initial_heading) {
  if (t.size() < 2) throw PreconditionError("to_offsets: need at least 2 points with an initial heading");
  std::vector<PolarOffset> out;
  out.reserve(t.size() - 1);
  double prev = initial_heading;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const Vec2 d = t[k + 1] - t[k];
    const double rho = norm(d);
    if (d.x == 0.0 && d.y == 0.0) {
      out.push_back({0.0, 0.0});
      continue;
    }
    const double h = std::atan2(d.y, d.x);
    out.push_back({rho, wrap_angle(h - prev)});
    prev = h;
  }
  return out;
}

Pose offsets_anchor(const Trajectory& t) {
  if (t.size() < 3) throw PreconditionError("offsets_anchor: need at least 3 points");
  return {t[1], headings(t)[1]};
}

std::vector<PolarOffset> to_offsets(const Trajectory& t) {
  if (t.size() < 3) throw PreconditionError("to_offsets: need at least 3 points to derive the initial heading");
  const Pose anchor = offsets_anchor(t);
  Trajectory tail;
  tail.rate_hz = t.rate_hz;
  tail.points.assign(t.points.begin() + 1, t.points.end());
  return to_offsets(tail, anchor.heading);
}

Trajectory from_offsets(const Pose& start, std::span<const PolarOffset> offs, double rate_hz) {
  if (offs.empty()) throw PreconditionError("from_offsets: no offsets");
  Trajectory out;
  out.rate_hz = rate_hz;
  out.points.reserve(offs.size() + 1);
  out.points.push_back(start.position);
  double h = start.heading;
  Vec2 p = start.position;
  for (const auto& o : offs) {
    h += o.theta;
    p = p + o.rho * Vec2{std::cos(h), std::sin(h)};
    out.points.push_back(p);
  }
  return out;
}

std::pair<Trajectory, Pose> normalize_heading_up(const Trajectory& t, std::size_t present_index) {
  if (present_index == 0 || present_index >= t.size()) {
    throw PreconditionError("normalize_heading_up: present index must satisfy 0 < index < size");
  }
  const Pose frame{t[present_index], heading_at(t, present_index)};
  Trajectory local = transform_to_local(t, frame);
  local[present_index] = {0.0, 0.0};
  return {std::move(local), frame};
}

Trajectory transform_to_world(const Trajectory& local, const Pose& frame) {
  Trajectory out;
  out.rate_hz = local.rate_hz;
  out.points.reserve(local.size());
  for (const auto& p : local.points) out.points.push_back(to_world(frame, p));
  return out;
}

Trajectory transform_to_local(const Trajectory& world, const Pose& frame) {
  Trajectory out;
  out.rate_hz = world.rate_hz;
  out.points.reserve(world.size());
  for (const auto& p : world.points) out.points.push_back(to_local(frame, p));
  return out;
}

std::vector<PolarOffset> filter_noise(std::span<const PolarOffset> offs, const NoiseFilter& filter) {
  if (filter.rho_min < 0.0 || filter.theta_max < 0.0) throw PreconditionError("filter thresholds must be >= 0");
  const double theta_max = filter.theta_unit == AngleUnit::kDegrees ? filter.theta_max * kPi / 180.0 : filter.theta_max;
  std::vector<PolarOffset> out;
  out.reserve(offs.size());
  for (const auto& o : offs) {
    if (o.rho < filter.rho_min && std::abs(o.theta) > theta_max) continue;
    out.push_back(o);
  }
  return out;
}

}  // namespace synthtraj
