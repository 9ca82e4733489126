#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "synthtraj/chain.hpp"
#include "synthtraj/geometry.hpp"

namespace synthtraj {

enum class MapClass : std::uint8_t { kBackground = 0, kRoad = 1, kSidewalk = 2 };
inline constexpr int kMapClassCount = 3;

struct PixelIndex {
  int col = 0;
  int row = 0;
  friend bool operator==(PixelIndex, PixelIndex) = default;
};

/// Top-view raster of class ids.
///
/// The map frame is the heading-up frame of `origin`: map-frame meters (u, v)
/// have u to the right and v up, and the origin sits on the corner shared by
/// pixels (W/2 - 1, H/2 - 1) and (W/2, H/2), so floor-based lookup puts the
/// origin in pixel (W/2, H/2). Rows grow downwards.
struct SemanticMap {
  int width = 0;
  int height = 0;
  double resolution = 0.5;
  Pose origin;
  std::vector<std::uint8_t> labels;

  static SemanticMap blank(int width, int height, double resolution = 0.5, Pose origin = {});

  bool empty() const { return width == 0 || height == 0; }
  bool contains(int col, int row) const { return col >= 0 && row >= 0 && col < width && row < height; }
  MapClass at(int col, int row) const {
    return static_cast<MapClass>(labels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                                        static_cast<std::size_t>(col)]);
  }
  void set(int col, int row, MapClass c) {
    labels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)] =
        static_cast<std::uint8_t>(c);
  }

  /// Continuous pixel coordinates of a world point; pixel (c, r) spans [c, c+1) x [r, r+1).
  Vec2 world_to_pixel(Vec2 world) const;
  Vec2 pixel_center_world(int col, int row) const;
  /// Pixel containing a world point, if inside the raster.
  std::optional<PixelIndex> pixel_of(Vec2 world) const;
  /// Class under a world point; background outside the raster.
  MapClass class_at(Vec2 world) const;

  /// H x W x 3 one-hot tensor, channel order (background, road, sidewalk).
  std::vector<std::uint8_t> one_hot() const;

  /// Throws PreconditionError on an invalid label or size.
  void validate() const;

  friend bool operator==(const SemanticMap&, const SemanticMap&) = default;
};

/// Polylines are simplified before rasterization; pixel centers closer than
/// this (in pixels) to a class boundary may fall on either side of it.
inline constexpr double kRasterTolerance = 0.25;

/// Marks as road every pixel whose center lies within width/2 of the polyline
/// (up to kRasterTolerance). Road overrides every other class. Returns false (and logs) when the path
/// misses the raster entirely.
bool rasterize_road(SemanticMap& map, const Trajectory& path, double width);

/// Marks as sidewalk the background pixels whose center lies in the band
/// (road_width/2, road_width/2 + w_s] of the polyline. With jitter, w_s varies
/// smoothly along the arc length within [0.3, 1] * sidewalk_width.
void add_sidewalks(SemanticMap& map, const Trajectory& path, double road_width, double sidewalk_width, bool jitter,
                   std::uint64_t seed);

/// Flips non-background pixels to background with a radial ramp
/// p(r) = intensity * clamp((r - 0.6 R) / (0.4 R), 0, 1) around the map center,
/// R being the half-diagonal. Returns the number of flipped pixels.
std::size_t apply_lidar_noise(SemanticMap& map, std::uint64_t seed, double intensity);

struct MapGenConfig {
  double lane_width = 6.0;
  double sidewalk_width = 1.5;
  int branching_factor_max = 5;
  double double_width_prob = 0.5;
  bool unreachable_roads = true;
  bool lidar_noise = true;
  double lidar_intensity = 0.5;
  bool sidewalk_jitter = true;
  int canvas = 720;
  double resolution = 0.5;

  void validate() const;
};

struct Road {
  Trajectory path;
  double width = 6.0;
  bool reachable = true;
};

struct BranchRoad {
  std::size_t anchor_index = 0;
  Trajectory path;
};

/// A generated scene on the working canvas. World coordinates are centered
/// on the canvas; the canvas origin faces up.
struct Scene {
  SemanticMap canvas;
  std::vector<Road> roads;
  Trajectory backbone;
  /// Backbone index where the forward chain walk starts.
  std::size_t forward_start = 0;
  /// Chain state at each backbone index >= forward_start.
  std::vector<std::uint32_t> forward_states;
  std::vector<BranchRoad> branches;
  std::vector<Trajectory> unreachable;
};

/// Step-by-step scene construction; build_scene() runs every step.
/// samples::generate_sample interleaves its own roads before the unreachable ones.
class SceneBuilder {
 public:
  SceneBuilder(const MarkovChain& chain, const MapGenConfig& cfg, std::uint64_t seed);

  /// Two-sided chain walk through a random start near the canvas center.
  void build_backbone();
  /// Draws b in [1, branching_factor_max] and grows b - 1 branch roads off the backbone.
  void add_branches();
  /// Adds a reachable road (width doubled at random).
  void add_road(Trajectory path);
  /// Adds 1-3 roads that keep a gap of at least two pixels to every reachable road.
  /// `focus` biases their placement around a point of interest.
  void add_unreachable_roads(std::optional<Vec2> focus = std::nullopt);
  /// Rasterizes sidewalks, then roads, on a fresh canvas.
  void render();

  bool inside_canvas(Vec2 p, double margin = 0.0) const;
  double half_extent() const;
  const Scene& scene() const { return scene_; }
  Scene& scene() { return scene_; }
  const MarkovChain& chain() const { return chain_; }
  const MapGenConfig& config() const { return cfg_; }

  /// Walks the chain from `start` until the canvas is left (at least `min_steps`).
  ChainWalk walk_out(std::uint32_t state, const Pose& start, Rng& rng, std::size_t min_steps,
                     std::optional<std::uint32_t> avoid = std::nullopt) const;
  ChainWalk walk_out(const Pose& start, Rng& rng) const;

 private:
  double draw_width();

  const MarkovChain& chain_;
  MapGenConfig cfg_;
  std::uint64_t seed_;
  Rng backbone_rng_;
  Rng branch_rng_;
  Rng width_rng_;
  Rng unreachable_rng_;
  Scene scene_;
};

/// Builds a full scene: backbone, branches, unreachable roads, sidewalks.
Scene build_scene(const MarkovChain& chain, const MapGenConfig& cfg, std::uint64_t seed);

}  // namespace synthtraj
