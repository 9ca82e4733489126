#include "synthtraj/samples.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "synthtraj/errors.hpp"

namespace synthtraj {

void MultimodalSample::validate() const {
  past.validate();
  if (past.size() != kPastLength) throw PreconditionError("sample past must have 20 points");
  if (futures.empty() || futures.size() > static_cast<std::size_t>(kMaxFutures)) {
    throw PreconditionError("sample must have 1 to 5 futures");
  }
  for (const auto& f : futures) {
    f.validate();
    if (f.size() != kFutureLength) throw PreconditionError("sample futures must have 40 points");
  }
  if (meta.branch_index.size() != futures.size()) throw PreconditionError("branch provenance does not match futures");
  if (std::abs(past.points.back().x) > 1e-9 || std::abs(past.points.back().y) > 1e-9) {
    throw PreconditionError("present point is not at the heading-up origin");
  }
  map.validate();
  if (!map.empty()) {
    if (map.width % 2 != 0 || map.height % 2 != 0) throw PreconditionError("sample map size must be even");
    if (!(pixel_of(past.points.back()) == PixelIndex{map.width / 2, map.height / 2})) {
      throw PreconditionError("present point does not map to the center pixel");
    }
  }
}

PixelIndex MultimodalSample::pixel_of(Vec2 local) const {
  return {static_cast<int>(std::floor(local.x / map.resolution + map.width / 2.0)),
          static_cast<int>(std::floor(map.height / 2.0 - local.y / map.resolution))};
}

void SampleConfig::validate() const {
  if (n_gt_min < 1 || n_gt_max > kMaxFutures || n_gt_min > n_gt_max) {
    throw PreconditionError("n_gt range must lie within [1, 5]");
  }
  if (crop_size <= 0 || crop_size % 2 != 0) throw PreconditionError("crop size must be positive and even");
  if (!(shift_lo <= shift_mode && shift_mode <= shift_hi) || !(shift_lo < shift_hi)) {
    throw PreconditionError("lateral shift triangle must satisfy lo <= mode <= hi, lo < hi");
  }
}

double draw_lateral_shift(double lane_width, const SampleConfig& cfg, Rng& rng) {
  return rng.triangular(cfg.shift_lo * lane_width, cfg.shift_mode * lane_width, cfg.shift_hi * lane_width);
}

Trajectory lateral_shift(const Trajectory& t, double d) {
  if (d == 0.0) return t;
  const auto h = headings(t);
  Trajectory out = t;
  for (std::size_t k = 0; k < t.size(); ++k) {
    out[k] = t[k] + d * Vec2{std::sin(h[k]), -std::cos(h[k])};
  }
  return out;
}

namespace {

Trajectory slice(const Trajectory& t, std::size_t begin, std::size_t end) {
  Trajectory out;
  out.rate_hz = t.rate_hz;
  out.points.assign(t.points.begin() + static_cast<std::ptrdiff_t>(begin),
                    t.points.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 d = b - a;
  const double len2 = d.x * d.x + d.y * d.y;
  double t = len2 > 0.0 ? ((p.x - a.x) * d.x + (p.y - a.y) * d.y) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + t * d);
}

double point_polyline_distance(Vec2 p, const Trajectory& t) {
  double best = std::numeric_limits<double>::infinity();
  if (t.size() == 1) return distance(p, t[0]);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) best = std::min(best, point_segment_distance(p, t[i], t[i + 1]));
  return best;
}

}  // namespace

std::optional<BackboneSegment> select_segment(const SceneBuilder& builder, const SampleConfig& cfg, Rng& rng) {
  const Scene& scene = builder.scene();
  const auto& bb = scene.backbone;
  const std::size_t p = kPastLength, f = kFutureLength;
  // The rotated crop must stay on the canvas even after the lateral shift.
  const double crop_reach = cfg.crop_size * builder.config().resolution / 2.0 * std::sqrt(2.0);
  const double margin = crop_reach + builder.config().lane_width + 1.0;
  std::vector<std::size_t> candidates;
  for (std::size_t i = std::max(p - 1, scene.forward_start); i + f < bb.size(); ++i) {
    if (builder.inside_canvas(bb[i], -margin)) candidates.push_back(i);
  }
  if (candidates.empty()) return std::nullopt;
  const std::size_t present = candidates[rng.below(candidates.size())];
  BackboneSegment seg;
  seg.present = present;
  seg.past = slice(bb, present + 1 - p, present + 1);
  seg.future = slice(bb, present + 1, present + 1 + f);
  return seg;
}

BranchedFutures branch_futures(SceneBuilder& builder, const BackboneSegment& segment, int n_gt, std::uint64_t seed) {
  if (n_gt < 1) throw PreconditionError("branch_futures: n_gt must be >= 1");
  BranchedFutures out;
  out.futures.push_back(segment.future);
  out.branch_index.push_back(-1);
  if (n_gt == 1) return out;

  const Scene& scene = builder.scene();
  const std::size_t f = segment.future.size();
  constexpr std::size_t kFirstBranch = 5;
  constexpr std::size_t kTailRoom = 10;
  std::vector<std::size_t> pool;
  for (std::size_t j = kFirstBranch; j + kTailRoom <= f; ++j) pool.push_back(j);
  Rng rng(seed);
  const auto wanted = static_cast<std::size_t>(n_gt - 1);
  if (pool.size() < wanted) out.warnings |= kWarnFewerFutures;
  const std::size_t take = std::min(wanted, pool.size());
  for (std::size_t i = 0; i < take; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  std::vector<std::size_t> picks(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  std::sort(picks.begin(), picks.end());

  const double separation = builder.config().lane_width;
  constexpr int kCandidates = 12;
  const auto bb_heading = headings(scene.backbone);
  for (std::size_t j : picks) {
    const std::size_t a = segment.present + 1 + j;
    const std::uint32_t state = scene.forward_states.at(a - scene.forward_start);
    const std::uint32_t next = scene.forward_states.at(a + 1 - scene.forward_start);
    const Pose start{scene.backbone[a], bb_heading[a]};
    const std::size_t needed = f - 1 - j;

    double best_sep = -1.0;
    ChainWalk best;
    // Candidates only need to reach the end of the future; the winner is then
    // continued from its last state until it leaves the canvas.
    for (int c = 0; c < kCandidates; ++c) {
      ChainWalk w = continue_walk(builder.chain(), state, needed, start, rng, next);
      double sep = std::numeric_limits<double>::infinity();
      for (const auto& other : out.futures) sep = std::min(sep, point_polyline_distance(w.trajectory[needed], other));
      if (sep > best_sep) {
        best_sep = sep;
        best = std::move(w);
      }
      if (best_sep >= separation) break;
    }
    if (best_sep < separation) out.warnings |= kWarnFuturesNotSeparated;
    double end_heading = start.heading;
    for (const auto& o : best.offsets) end_heading += o.theta;
    const Vec2 end = best.trajectory.points.back();
    const ChainWalk rest = builder.walk_out(best.states.back(), Pose{end, end_heading}, rng, 1);
    best.trajectory.points.insert(best.trajectory.points.end(), rest.trajectory.points.begin() + 1,
                                  rest.trajectory.points.end());

    Trajectory future = slice(segment.future, 0, j + 1);
    future.points.insert(future.points.end(), best.trajectory.points.begin() + 1,
                         best.trajectory.points.begin() + 1 + static_cast<std::ptrdiff_t>(needed));
    out.futures.push_back(std::move(future));
    out.branch_index.push_back(static_cast<std::int32_t>(j));
    builder.add_road(std::move(best.trajectory));
  }
  return out;
}

SemanticMap crop_context(const SemanticMap& scene, const Pose& present, int crop_size, std::size_t* out_of_canvas) {
  if (crop_size <= 0 || crop_size % 2 != 0) throw PreconditionError("crop size must be positive and even");
  SemanticMap crop = SemanticMap::blank(crop_size, crop_size, scene.resolution, present);
  // Scene pixel coordinates are affine in crop pixel indices.
  const Vec2 p00 = scene.world_to_pixel(crop.pixel_center_world(0, 0));
  const Vec2 dc = scene.world_to_pixel(crop.pixel_center_world(1, 0)) - p00;
  const Vec2 dr = scene.world_to_pixel(crop.pixel_center_world(0, 1)) - p00;
  std::size_t outside = 0;
  const auto sw = static_cast<std::size_t>(scene.width);
  auto out = crop.labels.begin();
  for (int row = 0; row < crop_size; ++row) {
    for (int col = 0; col < crop_size; ++col, ++out) {
      const double x = p00.x + col * dc.x + row * dr.x;
      const double y = p00.y + col * dc.y + row * dr.y;
      // Truncation is floor here since both are non-negative.
      if (x >= 0.0 && y >= 0.0 && x < scene.width && y < scene.height) {
        *out = scene.labels[static_cast<std::size_t>(y) * sw + static_cast<std::size_t>(x)];
      } else {
        ++outside;
      }
    }
  }
  if (out_of_canvas) *out_of_canvas = outside;
  return crop;
}

SampleBuild build_sample(const MarkovChain& chain, const MapGenConfig& map_cfg, const SampleConfig& sample_cfg,
                         std::uint64_t seed) {
  map_cfg.validate();
  sample_cfg.validate();
  Rng segment_rng = Rng::stream(seed, "segment");
  Rng ngt_rng = Rng::stream(seed, "n_gt");
  Rng shift_rng = Rng::stream(seed, "shift");

  constexpr int kSceneAttempts = 20;
  std::optional<SceneBuilder> builder;
  std::optional<BackboneSegment> segment;
  for (int attempt = 0; attempt < kSceneAttempts && !segment; ++attempt) {
    builder.emplace(chain, map_cfg, attempt == 0 ? seed : derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    builder->build_backbone();
    segment = select_segment(*builder, sample_cfg, segment_rng);
  }
  if (!segment) throw DataError("chain cannot produce a backbone long enough for a sample");
  builder->add_branches();

  const auto n_gt = static_cast<int>(ngt_rng.between(sample_cfg.n_gt_min, sample_cfg.n_gt_max));
  BranchedFutures branched = branch_futures(*builder, *segment, n_gt, splitmix64(seed) ^ hash_name("futures"));
  if (map_cfg.unreachable_roads) builder->add_unreachable_roads(segment->past.points.back());
  builder->render();

  SampleBuild out;
  out.world_past = segment->past;
  out.world_futures = branched.futures;

  const double d = sample_cfg.shift_enabled ? draw_lateral_shift(map_cfg.lane_width, sample_cfg, shift_rng) : 0.0;
  const std::size_t p = kPastLength;
  std::vector<Trajectory> shifted;
  for (const auto& fut : branched.futures) {
    Trajectory full = segment->past;
    full.points.insert(full.points.end(), fut.points.begin(), fut.points.end());
    shifted.push_back(lateral_shift(full, d));
  }
  const Pose present{shifted[0][p - 1], heading_at(shifted[0], p - 1)};

  auto& sample = out.sample;
  sample.map = crop_context(builder->scene().canvas, present, sample_cfg.crop_size, &out.out_of_canvas);
  out.clean_map = sample.map;
  if (map_cfg.lidar_noise) {
    apply_lidar_noise(sample.map, splitmix64(seed) ^ hash_name("noise"), map_cfg.lidar_intensity);
  }

  sample.past = transform_to_local(slice(shifted[0], 0, p), present);
  sample.past.points.back() = {0.0, 0.0};
  for (const auto& full : shifted) sample.futures.push_back(transform_to_local(slice(full, p, full.size()), present));

  sample.meta.seed = seed;
  sample.meta.scene_id = splitmix64(seed ^ hash_name("scene"));
  sample.meta.source = SampleSource::kSynthetic;
  sample.meta.branch_index = branched.branch_index;
  sample.meta.shift = d;
  sample.meta.warnings = branched.warnings | (out.out_of_canvas > 0 ? kWarnOutOfCanvas : 0u);
  if (out.out_of_canvas > 0) spdlog::warn("sample {}: {} crop pixels fell outside the canvas", seed, out.out_of_canvas);

  out.scene = std::move(builder->scene());
  sample.validate();
  return out;
}

MultimodalSample generate_sample(const MarkovChain& chain, const MapGenConfig& map_cfg,
                                 const SampleConfig& sample_cfg, std::uint64_t seed) {
  return std::move(build_sample(chain, map_cfg, sample_cfg, seed).sample);
}

}  // namespace synthtraj
