#pragma once

#include <cstdint>
#include <vector>

#include "synthtraj/chain.hpp"
#include "synthtraj/mapgen.hpp"

namespace synthtraj {

inline constexpr std::size_t kPastLength = 20;
inline constexpr std::size_t kFutureLength = 40;
inline constexpr int kMaxFutures = 5;

enum class SampleSource : std::uint8_t { kSynthetic = 0, kReal = 1 };

/// Warning bits recorded in SampleMeta::warnings.
enum SampleWarning : std::uint32_t {
  kWarnFewerFutures = 1u << 0,
  kWarnOutOfCanvas = 1u << 1,
  kWarnFuturesNotSeparated = 1u << 2,
};

struct SampleMeta {
  std::uint64_t seed = 0;
  std::uint64_t scene_id = 0;
  SampleSource source = SampleSource::kSynthetic;
  /// Per future: -1 for the backbone continuation, otherwise the future index
  /// after which the alternative leaves the backbone.
  std::vector<std::int32_t> branch_index;
  /// Lateral shift applied to every trajectory, meters, positive = right.
  double shift = 0.0;
  std::uint32_t warnings = 0;

  friend bool operator==(const SampleMeta&, const SampleMeta&) = default;
};

/// One observed past, 1-5 ground-truth futures and a heading-up context map.
///
/// Trajectories are in meters in the heading-up frame: the present (last past
/// point) is the origin and the vehicle faces +y. The map is centered on the
/// present. Real samples may carry an empty map.
struct MultimodalSample {
  Trajectory past;
  std::vector<Trajectory> futures;
  SemanticMap map;
  SampleMeta meta;

  /// Throws PreconditionError unless every sample invariant holds.
  void validate() const;
  /// Map pixel containing a heading-up point.
  PixelIndex pixel_of(Vec2 local) const;

  friend bool operator==(const MultimodalSample&, const MultimodalSample&) = default;
};

struct SampleConfig {
  int n_gt_min = 1;
  int n_gt_max = 5;
  bool shift_enabled = true;
  /// Lateral shift triangle, as fractions of the lane width (lo, mode, hi).
  double shift_lo = -0.25;
  double shift_mode = 0.25;
  double shift_hi = 0.35;
  int crop_size = 360;

  void validate() const;
};

/// Draws the per-trajectory lateral offset d from the configured triangle.
double draw_lateral_shift(double lane_width, const SampleConfig& cfg, Rng& rng);

/// Displaces every point by d along the local right-hand normal of its heading.
Trajectory lateral_shift(const Trajectory& t, double d);

/// Backbone window chosen for a sample: points [present - P + 1, present + F].
struct BackboneSegment {
  std::size_t present = 0;
  Trajectory past;  // P points, last = present
  Trajectory future;  // F points after the present
};

/// Picks a present index whose crop fits the canvas and whose future lies in
/// the forward walk. Returns nullopt if none exists.
std::optional<BackboneSegment> select_segment(const SceneBuilder& scene, const SampleConfig& cfg, Rng& rng);

struct BranchedFutures {
  std::vector<Trajectory> futures;
  std::vector<std::int32_t> branch_index;
  std::uint32_t warnings = 0;
};

/// Future 1 is the backbone continuation; futures 2..n_gt re-sample the chain
/// from distinct future indices in [5, F - 10], keeping the shared prefix, and
/// their roads are added to the scene.
BranchedFutures branch_futures(SceneBuilder& scene, const BackboneSegment& segment, int n_gt, std::uint64_t seed);

/// Rotates the scene about `present` so its heading points up and crops a
/// crop_size x crop_size window with the present in pixel (crop_size/2, crop_size/2).
/// Nearest-neighbour sampling; pixels outside the scene become background and are counted.
SemanticMap crop_context(const SemanticMap& scene, const Pose& present, int crop_size,
                         std::size_t* out_of_canvas = nullptr);

/// Everything produced on the way to a sample; tests and ablation diffs use it.
struct SampleBuild {
  MultimodalSample sample;
  SemanticMap clean_map;  // crop before LiDAR noise
  Scene scene;
  std::vector<Trajectory> world_futures;  // unshifted, world frame
  Trajectory world_past;
  std::size_t out_of_canvas = 0;
};

SampleBuild build_sample(const MarkovChain& chain, const MapGenConfig& map_cfg, const SampleConfig& sample_cfg,
                         std::uint64_t seed);

/// Full pipeline: scene, segment, branching futures, unreachable roads,
/// lateral shift, heading-up crop, LiDAR noise. Deterministic in seed.
MultimodalSample generate_sample(const MarkovChain& chain, const MapGenConfig& map_cfg,
                                 const SampleConfig& sample_cfg, std::uint64_t seed);

}  // namespace synthtraj
