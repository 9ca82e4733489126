#pragma once

// Shared fixtures and independent oracles for the test binaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "synthtraj/chain.hpp"
#include "synthtraj/demo_logs.hpp"
#include "synthtraj/geometry.hpp"
#include "synthtraj/mapgen.hpp"
#include "synthtraj/matching.hpp"
#include "synthtraj/rng.hpp"

namespace synthtraj::testing {

/// Chain estimated from 300 kinematic demo logs at default settings. Built once.
inline const MarkovChain& demo_chain() {
  static const MarkovChain chain = [] {
    const auto logs = kinematic_logs(300, 11);
    EstimateOptions o;
    o.seed = 5;
    return estimate(logs, o);
  }();
  return chain;
}

inline Trajectory line(Vec2 start, Vec2 step, std::size_t n) {
  Trajectory t;
  for (std::size_t i = 0; i < n; ++i) t.points.push_back(start + static_cast<double>(i) * step);
  return t;
}

/// Random wiggly path without duplicate consecutive points.
inline Trajectory random_path(Rng& rng, std::size_t n) {
  Trajectory t;
  Vec2 p{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)};
  double h = rng.uniform(-kPi, kPi);
  for (std::size_t i = 0; i < n; ++i) {
    t.points.push_back(p);
    h += rng.uniform(-0.8, 0.8);
    const double step = rng.uniform(0.05, 3.0);
    p = p + step * Vec2{std::cos(h), std::sin(h)};
  }
  return t;
}

inline Trajectory random_points(Rng& rng, std::size_t n, double spread = 10.0) {
  Trajectory t;
  for (std::size_t i = 0; i < n; ++i) t.points.push_back({rng.uniform(-spread, spread), rng.uniform(-spread, spread)});
  return t;
}

inline Trajectory rotated(const Trajectory& t, double angle, Vec2 shift = {}) {
  Trajectory out = t;
  for (auto& p : out.points) p = rotate(p, angle) + shift;
  return out;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("synthtraj_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

namespace oracle {

/// Greedy matching written from the rule alone: each round rebuilds the full
/// matrix of remaining pairs and scans it for the smallest entry.
inline Assignment naive_greedy(const std::vector<Trajectory>& preds, const std::vector<Trajectory>& gts,
                               TrajDistance kind) {
  Assignment a;
  std::vector<bool> pred_used(preds.size(), false), gt_used(gts.size(), false);
  const std::size_t rounds = std::min(preds.size(), gts.size());
  for (std::size_t round = 0; round < rounds; ++round) {
    std::vector<std::vector<double>> m(preds.size(), std::vector<double>(gts.size(), 0.0));
    for (std::size_t i = 0; i < preds.size(); ++i) {
      for (std::size_t j = 0; j < gts.size(); ++j) m[i][j] = trajectory_distance(preds[i], gts[j], kind);
    }
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (pred_used[i]) continue;
      for (std::size_t j = 0; j < gts.size(); ++j) {
        if (gt_used[j]) continue;
        if (m[i][j] < best) {
          best = m[i][j];
          bi = i;
          bj = j;
        }
      }
    }
    pred_used[bi] = gt_used[bj] = true;
    a.pairs.push_back({bi, bj});
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (pred_used[i]) continue;
    std::size_t bj = 0;
    for (std::size_t j = 1; j < gts.size(); ++j) {
      if (trajectory_distance(preds[i], gts[j], kind) < trajectory_distance(preds[i], gts[bj], kind)) bj = j;
    }
    a.leftover_pairs.push_back({i, bj});
  }
  return a;
}

/// Minimum-cost one-to-one matching by exhaustive search (small sizes only).
inline double optimal_matching_cost(const DistanceMatrix& d) {
  const bool transpose = d.rows > d.cols;
  const std::size_t small = transpose ? d.cols : d.rows;
  const std::size_t large = transpose ? d.rows : d.cols;
  std::vector<std::size_t> perm(large);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < small; ++i) cost += transpose ? d(perm[i], i) : d(i, perm[i]);
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 d = b - a;
  const double len2 = d.x * d.x + d.y * d.y;
  double t = len2 > 0.0 ? ((p.x - a.x) * d.x + (p.y - a.y) * d.y) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + t * d);
}

/// Distance in pixels from the center of pixel (col, row) to a world polyline.
inline double pixel_to_polyline(const SemanticMap& map, int col, int row, const Trajectory& path) {
  const Vec2 c{col + 0.5, row + 0.5};
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    best = std::min(best, point_segment_distance(c, map.world_to_pixel(path[i]), map.world_to_pixel(path[i + 1])));
  }
  if (path.size() == 1) best = distance(c, map.world_to_pixel(path[0]));
  return best;
}

/// 4-connected components over pixels of one class; -1 elsewhere.
inline std::vector<int> components(const SemanticMap& map, MapClass cls, int* count = nullptr) {
  std::vector<int> label(map.labels.size(), -1);
  int next = 0;
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * map.width + c;
      if (map.at(c, r) != cls || label[idx] >= 0) continue;
      std::queue<PixelIndex> q;
      q.push({c, r});
      label[idx] = next;
      while (!q.empty()) {
        const PixelIndex p = q.front();
        q.pop();
        const PixelIndex nb[4] = {{p.col + 1, p.row}, {p.col - 1, p.row}, {p.col, p.row + 1}, {p.col, p.row - 1}};
        for (const auto& n : nb) {
          if (!map.contains(n.col, n.row) || map.at(n.col, n.row) != cls) continue;
          const std::size_t j = static_cast<std::size_t>(n.row) * map.width + n.col;
          if (label[j] >= 0) continue;
          label[j] = next;
          q.push(n);
        }
      }
      ++next;
    }
  }
  if (count) *count = next;
  return label;
}

}  // namespace oracle
}  // namespace synthtraj::testing
