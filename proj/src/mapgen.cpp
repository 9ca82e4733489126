#include "synthtraj/mapgen.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "synthtraj/errors.hpp"

namespace synthtraj {

SemanticMap SemanticMap::blank(int width, int height, double resolution, Pose origin) {
  if (width < 0 || height < 0) throw PreconditionError("map size must be non-negative");
  if (!(resolution > 0.0)) throw PreconditionError("map resolution must be positive");
  SemanticMap m;
  m.width = width;
  m.height = height;
  m.resolution = resolution;
  m.origin = origin;
  m.labels.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                  static_cast<std::uint8_t>(MapClass::kBackground));
  return m;
}

Vec2 SemanticMap::world_to_pixel(Vec2 world) const {
  const Vec2 l = to_local(origin, world);
  return {l.x / resolution + width / 2.0, height / 2.0 - l.y / resolution};
}

Vec2 SemanticMap::pixel_center_world(int col, int row) const {
  const Vec2 local{(col + 0.5 - width / 2.0) * resolution, (height / 2.0 - row - 0.5) * resolution};
  return to_world(origin, local);
}

std::optional<PixelIndex> SemanticMap::pixel_of(Vec2 world) const {
  const Vec2 p = world_to_pixel(world);
  const double c = std::floor(p.x), r = std::floor(p.y);
  if (!(c >= 0.0 && r >= 0.0 && c < width && r < height)) return std::nullopt;
  return PixelIndex{static_cast<int>(c), static_cast<int>(r)};
}

MapClass SemanticMap::class_at(Vec2 world) const {
  auto px = pixel_of(world);
  return px ? at(px->col, px->row) : MapClass::kBackground;
}

std::vector<std::uint8_t> SemanticMap::one_hot() const {
  std::vector<std::uint8_t> out(labels.size() * kMapClassCount, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) out[i * kMapClassCount + labels[i]] = 1;
  return out;
}

void SemanticMap::validate() const {
  if (width < 0 || height < 0) throw PreconditionError("map size must be non-negative");
  if (!(resolution > 0.0)) throw PreconditionError("map resolution must be positive");
  if (labels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw PreconditionError("map label count does not match its size");
  }
  for (auto l : labels) {
    if (l >= kMapClassCount) throw PreconditionError("map label out of range");
  }
}

namespace {

/// Calls emit(row, c0, c1) for every row span of pixels whose centers lie
/// within `r` (pixels) of segment a-b, given in continuous pixel coordinates.
template <typename Emit>
void scan_capsule(Vec2 a, Vec2 b, double r, int width, int height, Emit&& emit) {
  const double y_lo = std::min(a.y, b.y) - r;
  const double y_hi = std::max(a.y, b.y) + r;
  const int row0 = std::max(0, static_cast<int>(std::ceil(y_lo - 0.5)));
  const int row1 = std::min(height - 1, static_cast<int>(std::floor(y_hi - 0.5)));
  const Vec2 d = b - a;
  const double len2 = d.x * d.x + d.y * d.y;
  const double len = std::sqrt(len2);
  const double r2 = r * r;

  for (int row = row0; row <= row1; ++row) {
    const double yc = row + 0.5;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    auto disc = [&](Vec2 p) {
      const double dy = yc - p.y;
      const double rem = r2 - dy * dy;
      if (rem < 0.0) return;
      const double half = std::sqrt(rem);
      lo = std::min(lo, p.x - half);
      hi = std::max(hi, p.x + half);
    };
    disc(a);
    disc(b);
    if (len2 > 0.0) {
      double s_lo = -std::numeric_limits<double>::infinity();
      double s_hi = std::numeric_limits<double>::infinity();
      const double ey = yc - a.y;
      bool empty = false;
      // Projection parameter in [0, 1].
      if (d.x != 0.0) {
        double x0 = a.x + (0.0 - ey * d.y) / d.x;
        double x1 = a.x + (len2 - ey * d.y) / d.x;
        if (x0 > x1) std::swap(x0, x1);
        s_lo = std::max(s_lo, x0);
        s_hi = std::min(s_hi, x1);
      } else {
        const double t = ey * d.y / len2;
        empty |= (t < 0.0 || t > 1.0);
      }
      // Perpendicular distance within r.
      if (d.y != 0.0) {
        double x0 = a.x + (ey * d.x - r * len) / d.y;
        double x1 = a.x + (ey * d.x + r * len) / d.y;
        if (x0 > x1) std::swap(x0, x1);
        s_lo = std::max(s_lo, x0);
        s_hi = std::min(s_hi, x1);
      } else {
        empty |= std::abs(ey) > r;
      }
      if (!empty && s_lo <= s_hi) {
        lo = std::min(lo, s_lo);
        hi = std::max(hi, s_hi);
      }
    }
    if (lo > hi) continue;
    const int c0 = std::max(0, static_cast<int>(std::ceil(lo - 0.5)));
    const int c1 = std::min(width - 1, static_cast<int>(std::floor(hi - 0.5)));
    if (c0 <= c1) emit(row, c0, c1);
  }
}

std::vector<Vec2> to_pixels(const SemanticMap& map, const Trajectory& path) {
  std::vector<Vec2> out;
  out.reserve(path.size());
  for (const auto& p : path.points) out.push_back(map.world_to_pixel(p));
  return out;
}

// Douglas-Peucker in pixel space over px[i0..i1]: marks in `keep` the points
// needed so that every dropped point lies within `tol` of the simplified
// polyline. Kept segments are additionally split to stay shorter than `max_len`.
void simplify_span(const std::vector<Vec2>& px, std::size_t i0, std::size_t i1, double tol, double max_len,
                   std::vector<bool>& keep) {
  keep[i0] = keep[i1] = true;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{i0, i1}};
  while (!stack.empty()) {
    const auto [s0, s1] = stack.back();
    stack.pop_back();
    if (s1 <= s0 + 1) continue;
    const Vec2 a = px[s0], b = px[s1];
    const Vec2 d = b - a;
    const double len2 = d.x * d.x + d.y * d.y;
    double worst = -1.0;
    std::size_t worst_i = s0;
    for (std::size_t i = s0 + 1; i < s1; ++i) {
      double t = len2 > 0.0 ? ((px[i].x - a.x) * d.x + (px[i].y - a.y) * d.y) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const Vec2 e = px[i] - (a + t * d);
      const double dist2 = e.x * e.x + e.y * e.y;
      if (dist2 > worst) {
        worst = dist2;
        worst_i = i;
      }
    }
    if (worst > tol * tol || len2 > max_len * max_len) {
      // Split long but straight spans in the middle.
      if (worst <= tol * tol) worst_i = (s0 + s1) / 2;
      keep[worst_i] = true;
      stack.push_back({s0, worst_i});
      stack.push_back({worst_i, s1});
    }
  }
}

std::vector<std::size_t> kept_indices(const std::vector<bool>& keep) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) out.push_back(i);
  }
  return out;
}

/// A path in continuous pixel coordinates with its simplifications: `kept`
/// for plain strokes, `kept_fine` with segments short enough for jittered widths.
struct PixelPath {
  std::vector<Vec2> px;
  std::vector<std::size_t> kept;
  std::vector<std::size_t> kept_fine;
};

constexpr double kKnotSpacing = 4.0;  // meters between sidewalk width knots

PixelPath pixel_path(const SemanticMap& map, const Trajectory& path, bool fine) {
  PixelPath p;
  p.px = to_pixels(map, path);
  if (p.px.empty()) return p;
  std::vector<bool> keep(p.px.size(), false);
  simplify_span(p.px, 0, p.px.size() - 1, kRasterTolerance, std::numeric_limits<double>::infinity(), keep);
  p.kept = kept_indices(keep);
  if (fine) {
    // Refines the coarse result: each kept span already meets the tolerance.
    const double max_len = kKnotSpacing / map.resolution;
    for (std::size_t k = 0; k + 1 < p.kept.size(); ++k) {
      simplify_span(p.px, p.kept[k], p.kept[k + 1], kRasterTolerance, max_len, keep);
    }
    p.kept_fine = kept_indices(keep);
  }
  return p;
}

template <typename Emit>
void scan_polyline(const PixelPath& p, double r, int width, int height, Emit&& emit) {
  if (p.px.size() == 1) {
    scan_capsule(p.px[0], p.px[0], r, width, height, emit);
    return;
  }
  for (std::size_t k = 0; k + 1 < p.kept.size(); ++k) {
    scan_capsule(p.px[p.kept[k]], p.px[p.kept[k + 1]], r, width, height, emit);
  }
}

double arc_length(const Trajectory& t) {
  double s = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) s += distance(t[i], t[i - 1]);
  return s;
}

bool paint_road(SemanticMap& map, const PixelPath& p, double width) {
  const double r = width / 2.0 / map.resolution;
  bool touched = false;
  const auto w = static_cast<std::size_t>(map.width);
  scan_polyline(p, r, map.width, map.height, [&](int row, int c0, int c1) {
    auto* line = map.labels.data() + static_cast<std::size_t>(row) * w;
    std::fill(line + c0, line + c1 + 1, static_cast<std::uint8_t>(MapClass::kRoad));
    touched = true;
  });
  return touched;
}

// Outer radius in pixels for every kept_fine segment of the path.
std::vector<double> sidewalk_radii(const SemanticMap& map, const Trajectory& path, const PixelPath& p,
                                   double road_width, double sidewalk_width, bool jitter, std::uint64_t seed) {
  const double r_in = road_width / 2.0 / map.resolution;
  // Jitter interpolates random widths at knots every kKnotSpacing meters of arc length.
  std::vector<double> knots;
  if (jitter) {
    Rng rng(seed);
    knots.resize(static_cast<std::size_t>(arc_length(path) / kKnotSpacing) + 3);
    for (auto& k : knots) k = rng.uniform(0.3, 1.0) * sidewalk_width;
  }
  auto width_at = [&](double s) {
    if (!jitter) return sidewalk_width;
    const double u = std::clamp(s / kKnotSpacing, 0.0, static_cast<double>(knots.size() - 2));
    const auto k = static_cast<std::size_t>(u);
    const double f = u - static_cast<double>(k);
    return knots[k] * (1.0 - f) + knots[k + 1] * f;
  };
  std::vector<double> cum(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) cum[i] = cum[i - 1] + distance(path[i - 1], path[i]);
  std::vector<double> radii;
  for (std::size_t k = 0; k + 1 < p.kept_fine.size(); ++k) {
    const std::size_t i0 = p.kept_fine[k], i1 = p.kept_fine[k + 1];
    radii.push_back(r_in + width_at((cum[i0] + cum[i1]) / 2.0) / map.resolution);
  }
  return radii;
}

// Calls emit(row, c0, c1) over the whole outer footprint (road plus sidewalk band).
template <typename Emit>
void scan_sidewalk_footprint(const SemanticMap& map, const PixelPath& p, const std::vector<double>& radii,
                             Emit&& emit) {
  for (std::size_t k = 0; k + 1 < p.kept_fine.size(); ++k) {
    scan_capsule(p.px[p.kept_fine[k]], p.px[p.kept_fine[k + 1]], radii[k], map.width, map.height, emit);
  }
}

void paint_sidewalks(SemanticMap& map, const Trajectory& path, const PixelPath& p, double road_width,
                     double sidewalk_width, bool jitter, std::uint64_t seed) {
  const double r_in = road_width / 2.0 / map.resolution;
  const auto w = static_cast<std::size_t>(map.width);
  const auto radii = sidewalk_radii(map, path, p, road_width, sidewalk_width, jitter, seed);

  // Scratch mask of the road interior, cleared again before returning.
  thread_local std::vector<std::uint8_t> inner;
  inner.resize(map.labels.size(), 0);
  auto mark_inner = [&](std::uint8_t v) {
    scan_polyline(p, r_in, map.width, map.height, [&](int row, int c0, int c1) {
      auto* line = inner.data() + static_cast<std::size_t>(row) * w;
      std::fill(line + c0, line + c1 + 1, v);
    });
  };
  mark_inner(1);
  scan_sidewalk_footprint(map, p, radii, [&](int row, int c0, int c1) {
    const std::size_t base = static_cast<std::size_t>(row) * w;
    for (int c = c0; c <= c1; ++c) {
      const std::size_t idx = base + static_cast<std::size_t>(c);
      if (!inner[idx] && map.labels[idx] == static_cast<std::uint8_t>(MapClass::kBackground)) {
        map.labels[idx] = static_cast<std::uint8_t>(MapClass::kSidewalk);
      }
    }
  });
  mark_inner(0);
}

}  // namespace

bool rasterize_road(SemanticMap& map, const Trajectory& path, double width) {
  if (!(width > 0.0)) throw PreconditionError("road width must be positive");
  if (path.size() < 2) throw PreconditionError("road path needs at least 2 points");
  const bool touched = paint_road(map, pixel_path(map, path, false), width);
  if (!touched) spdlog::debug("road path lies entirely outside the raster; nothing drawn");
  return touched;
}

void add_sidewalks(SemanticMap& map, const Trajectory& path, double road_width, double sidewalk_width, bool jitter,
                   std::uint64_t seed) {
  if (!(road_width > 0.0) || !(sidewalk_width > 0.0)) throw PreconditionError("widths must be positive");
  if (path.size() < 2) throw PreconditionError("sidewalk path needs at least 2 points");
  paint_sidewalks(map, path, pixel_path(map, path, true), road_width, sidewalk_width, jitter, seed);
}

std::size_t apply_lidar_noise(SemanticMap& map, std::uint64_t seed, double intensity) {
  if (!(intensity >= 0.0 && intensity <= 1.0)) throw PreconditionError("noise intensity must be in [0, 1]");
  if (intensity == 0.0 || map.empty()) return 0;
  Rng rng(seed);
  const double cx = map.width / 2.0, cy = map.height / 2.0;
  const double big_r = std::hypot(cx, cy);
  std::size_t flipped = 0;
  for (int row = 0; row < map.height; ++row) {
    for (int col = 0; col < map.width; ++col) {
      if (map.at(col, row) == MapClass::kBackground) continue;
      const double dx = col + 0.5 - cx, dy = row + 0.5 - cy;
      const double r = std::sqrt(dx * dx + dy * dy);
      const double p = intensity * std::clamp((r - 0.6 * big_r) / (0.4 * big_r), 0.0, 1.0);
      if (p <= 0.0) continue;
      if (rng.uniform() < p) {
        map.set(col, row, MapClass::kBackground);
        ++flipped;
      }
    }
  }
  return flipped;
}

void MapGenConfig::validate() const {
  if (!(lane_width > 0.0) || !(sidewalk_width > 0.0)) throw PreconditionError("lane and sidewalk widths must be > 0");
  if (branching_factor_max < 1) throw PreconditionError("branching_factor_max must be >= 1");
  if (!(double_width_prob >= 0.0 && double_width_prob <= 1.0)) throw PreconditionError("double_width_prob not in [0,1]");
  if (!(lidar_intensity >= 0.0 && lidar_intensity <= 1.0)) throw PreconditionError("lidar_intensity not in [0,1]");
  if (canvas < 2 || canvas % 2 != 0) throw PreconditionError("canvas must be a positive even pixel count");
  if (!(resolution > 0.0)) throw PreconditionError("resolution must be positive");
}

namespace {

constexpr std::size_t kMaxWalkSteps = 6000;
constexpr double kBackboneStartBox = 30.0;
constexpr double kWalkExitMargin = 10.0;

Trajectory join_two_sided(const Trajectory& backward, const Trajectory& forward) {
  Trajectory out;
  out.rate_hz = forward.rate_hz;
  out.points.reserve(backward.size() + forward.size());
  for (std::size_t i = backward.size(); i-- > 1;) out.points.push_back(backward[i]);
  out.points.insert(out.points.end(), forward.points.begin(), forward.points.end());
  return out;
}

}  // namespace

SceneBuilder::SceneBuilder(const MarkovChain& chain, const MapGenConfig& cfg, std::uint64_t seed)
    : chain_(chain),
      cfg_(cfg),
      seed_(seed),
      backbone_rng_(Rng::stream(seed, "backbone")),
      branch_rng_(Rng::stream(seed, "branches")),
      width_rng_(Rng::stream(seed, "width")),
      unreachable_rng_(Rng::stream(seed, "unreachable")) {
  cfg_.validate();
  scene_.canvas = SemanticMap::blank(cfg_.canvas, cfg_.canvas, cfg_.resolution);
}

double SceneBuilder::half_extent() const { return cfg_.canvas * cfg_.resolution / 2.0; }

bool SceneBuilder::inside_canvas(Vec2 p, double margin) const {
  const double h = half_extent() + margin;
  return std::abs(p.x) <= h && std::abs(p.y) <= h;
}

ChainWalk SceneBuilder::walk_out(std::uint32_t state, const Pose& start, Rng& rng, std::size_t min_steps,
                                 std::optional<std::uint32_t> avoid) const {
  std::size_t taken = 0;
  auto stop = [&](Vec2 p) { return ++taken >= min_steps && !inside_canvas(p, kWalkExitMargin); };
  return continue_walk(chain_, state, std::max(kMaxWalkSteps, min_steps), start, rng, avoid, stop);
}

ChainWalk SceneBuilder::walk_out(const Pose& start, Rng& rng) const {
  auto stop = [&](Vec2 p) { return !inside_canvas(p, kWalkExitMargin); };
  return sample_walk(chain_, kMaxWalkSteps, start, rng, stop);
}

double SceneBuilder::draw_width() {
  return cfg_.lane_width * (width_rng_.bernoulli(cfg_.double_width_prob) ? 2.0 : 1.0);
}

void SceneBuilder::build_backbone() {
  const Pose start{{backbone_rng_.uniform(-kBackboneStartBox, kBackboneStartBox),
                    backbone_rng_.uniform(-kBackboneStartBox, kBackboneStartBox)},
                   backbone_rng_.uniform(-kPi, kPi)};
  ChainWalk forward = walk_out(start, backbone_rng_);
  ChainWalk backward = walk_out(Pose{start.position, start.heading + kPi}, backbone_rng_);
  scene_.backbone = join_two_sided(backward.trajectory, forward.trajectory);
  scene_.forward_start = backward.trajectory.size() - 1;
  scene_.forward_states = std::move(forward.states);
  scene_.roads.push_back({scene_.backbone, draw_width(), true});
}

void SceneBuilder::add_branches() {
  const auto b = branch_rng_.between(1, cfg_.branching_factor_max);
  const auto& backbone = scene_.backbone;
  const auto heading = headings(backbone);
  std::vector<std::size_t> inside;
  for (std::size_t i = 0; i < backbone.size(); ++i) {
    if (inside_canvas(backbone[i])) inside.push_back(i);
  }
  if (inside.empty()) return;

  constexpr int kAttempts = 10;
  constexpr std::size_t kMinInside = 10;
  for (std::int64_t i = 1; i < b; ++i) {
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      const std::size_t anchor = inside[branch_rng_.below(inside.size())];
      const double turn = branch_rng_.uniform(kPi / 6.0, kPi / 2.0) * (branch_rng_.bernoulli(0.5) ? 1.0 : -1.0);
      ChainWalk w = walk_out(Pose{backbone[anchor], heading[anchor] + turn}, branch_rng_);
      std::size_t in = 0;
      for (const auto& p : w.trajectory.points) in += inside_canvas(p);
      if (in < kMinInside && attempt + 1 < kAttempts) continue;
      scene_.branches.push_back({anchor, w.trajectory});
      add_road(std::move(w.trajectory));
      break;
    }
  }
}

void SceneBuilder::add_road(Trajectory path) { scene_.roads.push_back({std::move(path), draw_width(), true}); }

void SceneBuilder::add_unreachable_roads(std::optional<Vec2> focus) {
  const SemanticMap& canvas = scene_.canvas;
  const auto w = static_cast<std::size_t>(canvas.width);
  constexpr double kGapPixels = 2.0;
  constexpr double kMinLength = 30.0;
  constexpr int kAttempts = 40;
  constexpr double kFocusBox = 90.0;
  constexpr double kProbeSpacing = 0.5;  // pixels between centerline probes

  // Centerline points of an unreachable road must avoid this mask. Its radius
  // covers the widest unreachable road, the gap, simplification and the
  // distance from a probe to its pixel center.
  const double max_radius_px = cfg_.lane_width / canvas.resolution;
  std::vector<std::uint8_t> forbidden(canvas.labels.size(), 0);
  for (const auto& road : scene_.roads) {
    if (!road.reachable || road.path.size() == 0) continue;
    const double r = road.width / 2.0 / canvas.resolution + max_radius_px + kGapPixels + kRasterTolerance +
                     std::sqrt(0.5) + kProbeSpacing / 2.0;
    scan_polyline(pixel_path(canvas, road.path, false), r, canvas.width, canvas.height,
                  [&](int row, int c0, int c1) {
                    auto* line = forbidden.data() + static_cast<std::size_t>(row) * w;
                    std::fill(line + c0, line + c1 + 1, std::uint8_t{1});
                  });
  }
  auto blocked = [&](Vec2 world) {
    const Vec2 px = canvas.world_to_pixel(world);
    const double c = std::floor(px.x), r = std::floor(px.y);
    if (!(c >= 0.0 && r >= 0.0 && c < canvas.width && r < canvas.height)) return false;
    return forbidden[static_cast<std::size_t>(r) * w + static_cast<std::size_t>(c)] != 0;
  };
  // Walks out of the canvas, stopping before the first step that comes too close.
  auto clear_walk = [&](const Pose& start) {
    Vec2 prev = start.position;
    bool hit = false;
    auto stop = [&](Vec2 p) {
      const double len = distance(prev, p) / canvas.resolution;
      const int probes = std::max(1, static_cast<int>(std::ceil(len / kProbeSpacing)));
      for (int k = 1; k <= probes && !hit; ++k) hit = blocked(prev + (static_cast<double>(k) / probes) * (p - prev));
      prev = p;
      return hit || !inside_canvas(p, kWalkExitMargin);
    };
    Trajectory t = sample_walk(chain_, kMaxWalkSteps, start, unreachable_rng_, stop).trajectory;
    if (hit) t.points.pop_back();
    return t;
  };

  const auto count = unreachable_rng_.between(1, 3);
  const double he = half_extent();
  for (std::int64_t n = 0; n < count; ++n) {
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      Vec2 start;
      if (focus) {
        start = {std::clamp(focus->x + unreachable_rng_.uniform(-kFocusBox, kFocusBox), -he, he),
                 std::clamp(focus->y + unreachable_rng_.uniform(-kFocusBox, kFocusBox), -he, he)};
      } else {
        start = {unreachable_rng_.uniform(-he, he), unreachable_rng_.uniform(-he, he)};
      }
      const double heading = unreachable_rng_.uniform(-kPi, kPi);
      const double width = cfg_.lane_width * (unreachable_rng_.bernoulli(cfg_.double_width_prob) ? 2.0 : 1.0);
      if (blocked(start)) continue;
      const Trajectory f = clear_walk(Pose{start, heading});
      const Trajectory bk = clear_walk(Pose{start, heading + kPi});
      Trajectory path = join_two_sided(bk, f);
      if (path.size() < 2 || arc_length(path) < kMinLength) continue;
      scene_.unreachable.push_back(path);
      scene_.roads.push_back({std::move(path), width, false});
      break;
    }
  }
  if (scene_.unreachable.empty()) spdlog::debug("no room for an unreachable road in scene {}", seed_);
}

void SceneBuilder::render() {
  auto& canvas = scene_.canvas;
  canvas = SemanticMap::blank(cfg_.canvas, cfg_.canvas, cfg_.resolution);
  const std::uint64_t sidewalk_seed = splitmix64(seed_) ^ hash_name("sidewalk");
  const auto w = static_cast<std::size_t>(canvas.width);
  std::vector<PixelPath> paths;
  for (const auto& road : scene_.roads) paths.push_back(pixel_path(canvas, road.path, true));
  // Every road is painted over the sidewalks afterwards, so on a fresh canvas
  // filling whole footprints gives the same result as add_sidewalks().
  for (std::size_t i = 0; i < scene_.roads.size(); ++i) {
    const auto& road = scene_.roads[i];
    if (road.path.size() < 2) continue;
    const auto radii = sidewalk_radii(canvas, road.path, paths[i], road.width, cfg_.sidewalk_width,
                                      cfg_.sidewalk_jitter, derive_seed(sidewalk_seed, i));
    scan_sidewalk_footprint(canvas, paths[i], radii, [&](int row, int c0, int c1) {
      auto* line = canvas.labels.data() + static_cast<std::size_t>(row) * w;
      std::fill(line + c0, line + c1 + 1, static_cast<std::uint8_t>(MapClass::kSidewalk));
    });
  }
  for (std::size_t i = 0; i < scene_.roads.size(); ++i) {
    if (scene_.roads[i].path.size() >= 2) paint_road(canvas, paths[i], scene_.roads[i].width);
  }
}

Scene build_scene(const MarkovChain& chain, const MapGenConfig& cfg, std::uint64_t seed) {
  SceneBuilder builder(chain, cfg, seed);
  builder.build_backbone();
  builder.add_branches();
  if (cfg.unreachable_roads) builder.add_unreachable_roads();
  builder.render();
  return std::move(builder.scene());
}

}  // namespace synthtraj
