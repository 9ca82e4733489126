#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace synthtraj {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kHeadingUp = kPi / 2.0;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double norm(Vec2 v) { return std::sqrt(v.x * v.x + v.y * v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Ordered 2-D positions in meters sampled at a fixed rate.
///
/// Invariants (checked by validate()): at least two points, all coordinates
/// finite, rate_hz > 0.
struct Trajectory {
  std::vector<Vec2> points;
  double rate_hz = 10.0;

  std::size_t size() const { return points.size(); }
  const Vec2& operator[](std::size_t i) const { return points[i]; }
  Vec2& operator[](std::size_t i) { return points[i]; }

  /// Throws PreconditionError when an invariant does not hold.
  void validate() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Per-step motion increment in the vehicle frame. rho is the distance
/// travelled; theta is the signed heading change (positive = left turn).
struct PolarOffset {
  double rho = 0.0;
  double theta = 0.0;

  friend bool operator==(PolarOffset, PolarOffset) = default;
};

/// Position plus heading (radians, counterclockwise from +x).
struct Pose {
  Vec2 position;
  double heading = kHeadingUp;

  friend bool operator==(const Pose&, const Pose&) = default;
};

/// Maps a point expressed in the pose's heading-up frame to world coordinates.
Vec2 to_world(const Pose& frame, Vec2 local);
/// Inverse of to_world.
Vec2 to_local(const Pose& frame, Vec2 world);

/// Per-point heading: index k takes the direction of segment (k-1 -> k),
/// index 0 copies the first non-degenerate segment. Zero-length segments
/// inherit the previous heading; an entirely static trajectory points up.
std::vector<double> headings(const Trajectory& t);

/// Converts a path to polar offsets. The initial heading is taken from the
/// first segment, which is consumed: n points give n-2 offsets.
std::vector<PolarOffset> to_offsets(const Trajectory& t);
/// Same, with an explicit heading at point 0: n points give n-1 offsets and
/// from_offsets({t[0], initial_heading}, result) reproduces t.
std::vector<PolarOffset> to_offsets(const Trajectory& t, double initial_heading);

/// Pose at point 1 with the heading of the first segment; the start pose for
/// reconstructing t[1..] from to_offsets(t).
Pose offsets_anchor(const Trajectory& t);

/// Rebuilds a path from offsets. The result has offs.size() + 1 points,
/// starting at start.position.
Trajectory from_offsets(const Pose& start, std::span<const PolarOffset> offs, double rate_hz = 10.0);

/// Heading of the vehicle at `index`, falling back to the most recent
/// non-degenerate segment.
double heading_at(const Trajectory& t, std::size_t index);

/// Rigidly moves t so that t[present_index] sits at the origin facing +y.
/// The returned pose maps the normalized frame back to the input frame via to_world.
std::pair<Trajectory, Pose> normalize_heading_up(const Trajectory& t, std::size_t present_index);

/// Applies the inverse of a normalization.
Trajectory transform_to_world(const Trajectory& local, const Pose& frame);
Trajectory transform_to_local(const Trajectory& world, const Pose& frame);

enum class AngleUnit { kRadians, kDegrees };

struct NoiseFilter {
  double rho_min = 0.005;
  double theta_max = 0.5;
  AngleUnit theta_unit = AngleUnit::kRadians;
};

/// Drops offsets of a near-still vehicle reporting a sharp turn
/// (rho < rho_min and |theta| > theta_max).
std::vector<PolarOffset> filter_noise(std::span<const PolarOffset> offs, const NoiseFilter& filter = {});

}  // namespace synthtraj
