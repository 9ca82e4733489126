#include "synthtraj/demo_logs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "synthtraj/binary_io.hpp"
#include "synthtraj/dataset_io.hpp"
#include "synthtraj/rng.hpp"

namespace synthtraj {

namespace {

constexpr double kDt = 0.1;

// Approximately normal: sum of 4 uniforms, scaled to unit variance.
double soft_normal(Rng& rng) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += rng.uniform() - 0.5;
  return s * std::sqrt(3.0);
}

Trajectory one_log(Rng& rng) {
  const auto n = static_cast<std::size_t>(rng.between(60, 200));
  double speed = rng.uniform(2.0, 14.0);
  double cruise = speed;
  double heading = rng.uniform(-kPi, kPi);
  Vec2 p{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)};

  // Manoeuvre state: remaining steps, yaw rate, and whether we are stopping.
  int left = 0;
  double yaw_rate = 0.0;
  int stop_steps = 0;

  Trajectory t;
  for (std::size_t i = 0; i < n; ++i) {
    t.points.push_back(p + 0.02 * Vec2{soft_normal(rng), soft_normal(rng)});
    if (left <= 0) {
      left = static_cast<int>(rng.between(10, 60));
      const double u = rng.uniform();
      if (u < 0.55) {
        yaw_rate = rng.uniform(-0.02, 0.02);
      } else if (u < 0.85) {
        // gentle curve
        yaw_rate = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.03, 0.15);
      } else {
        // intersection turn, roughly 90 degrees at reduced speed
        left = 40;
        yaw_rate = (rng.bernoulli(0.5) ? 1.0 : -1.0) * (kPi / 2.0) / (left * kDt);
        cruise = rng.uniform(3.0, 6.0);
      }
      if (rng.bernoulli(0.12)) stop_steps = static_cast<int>(rng.between(10, 30));
      if (std::abs(yaw_rate) < 0.2) cruise = rng.uniform(2.0, 14.0);
    }
    --left;
    double target = cruise;
    if (stop_steps > 0) {
      target = 0.0;
      if (speed < 0.05) --stop_steps;
    }
    const double accel = std::clamp((target - speed) / 1.5, -3.0, 2.0);
    speed = std::max(0.0, speed + accel * kDt);
    if (speed < 0.05 && target == 0.0) speed = 0.0;
    heading += yaw_rate * kDt * std::min(1.0, speed / 2.0);
    p = p + (speed * kDt) * Vec2{std::cos(heading), std::sin(heading)};
  }
  return t;
}

}  // namespace

std::vector<Trajectory> kinematic_logs(std::size_t count, std::uint64_t seed) {
  std::vector<Trajectory> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    out.push_back(one_log(rng));
  }
  return out;
}

void write_demo_split(const std::filesystem::path& dir, std::size_t count, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  const auto logs = kinematic_logs(count, seed);
  for (std::size_t i = 0; i < logs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.txt", i);
    const std::string text = format_trajectory_text(logs[i]);
    write_file((dir / name).string(),
               std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }
}

}  // namespace synthtraj
