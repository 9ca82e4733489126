#include <doctest.h>

#include <set>

#include "support.hpp"
#include "synthtraj/dataset_io.hpp"
#include "synthtraj/errors.hpp"
#include "synthtraj/samples.hpp"

using namespace synthtraj;
using namespace synthtraj::testing;

namespace {

bool on_road(const SemanticMap& map, PixelIndex p) {
  return map.contains(p.col, p.row) && map.at(p.col, p.row) == MapClass::kRoad;
}

double polyline_distance(Vec2 p, const Trajectory& t) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < t.size(); ++i) best = std::min(best, oracle::point_segment_distance(p, t[i], t[i + 1]));
  return best;
}

struct Prepared {
  std::optional<SceneBuilder> builder;
  BackboneSegment segment;
};

Prepared prepare(std::uint64_t seed) {
  Prepared p;
  Rng rng(seed);
  for (std::uint64_t k = 0;; ++k) {
    p.builder.emplace(demo_chain(), MapGenConfig{}, derive_seed(seed, k));
    p.builder->build_backbone();
    if (auto s = select_segment(*p.builder, SampleConfig{}, rng)) {
      p.segment = *s;
      break;
    }
  }
  p.builder->add_branches();
  return p;
}

}  // namespace

TEST_SUITE("samples") {
  TEST_CASE("default sample shape") {
    const MultimodalSample s = generate_sample(demo_chain(), MapGenConfig{}, SampleConfig{}, 1);
    CHECK(s.past.size() == 20);
    CHECK(s.futures.size() >= 1);
    CHECK(s.futures.size() <= 5);
    for (const auto& f : s.futures) CHECK(f.size() == 40);
    CHECK(s.map.width == 360);
    CHECK(s.map.height == 360);
    CHECK(s.map.width * s.map.resolution == doctest::Approx(180.0));
    CHECK(s.pixel_of(s.past.points.back()) == PixelIndex{180, 180});
    CHECK(s.meta.branch_index.size() == s.futures.size());
    CHECK(s.meta.branch_index[0] == -1);
    CHECK_NOTHROW(s.validate());
  }

  TEST_CASE("identical seeds give identical bytes") {
    for (std::uint64_t seed : {0ull, 17ull, 12345ull}) {
      const auto a = generate_sample(demo_chain(), MapGenConfig{}, SampleConfig{}, seed);
      const auto b = generate_sample(demo_chain(), MapGenConfig{}, SampleConfig{}, seed);
      CHECK(a == b);
      CHECK(encode_sample(a) == encode_sample(b));
    }
    const auto a = generate_sample(demo_chain(), MapGenConfig{}, SampleConfig{}, 1);
    const auto b = generate_sample(demo_chain(), MapGenConfig{}, SampleConfig{}, 2);
    CHECK_FALSE(a == b);
  }

  TEST_CASE("future points are on road before noise, present at the center") {
    for (std::uint64_t seed = 100; seed < 140; ++seed) {
      const SampleBuild b = build_sample(demo_chain(), MapGenConfig{}, SampleConfig{}, seed);
      for (const auto& f : b.sample.futures) {
        for (const auto& p : f.points) CHECK(on_road(b.clean_map, b.sample.pixel_of(p)));
      }
      for (const auto& p : b.sample.past.points) CHECK(on_road(b.clean_map, b.sample.pixel_of(p)));
      CHECK(b.out_of_canvas == 0);
      CHECK(b.sample.pixel_of({0, 0}) == PixelIndex{180, 180});
    }
  }

  TEST_CASE("single future is the backbone continuation") {
    Prepared p = prepare(3);
    const BranchedFutures out = branch_futures(*p.builder, p.segment, 1, 9);
    REQUIRE(out.futures.size() == 1);
    CHECK(out.futures[0] == p.segment.future);
    CHECK(out.branch_index == std::vector<std::int32_t>{-1});
    CHECK_THROWS_AS(branch_futures(*p.builder, p.segment, 0, 9), PreconditionError);
  }

  TEST_CASE("branched futures share a prefix and then diverge") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Prepared p = prepare(seed);
      const std::size_t roads_before = p.builder->scene().roads.size();
      const BranchedFutures out = branch_futures(*p.builder, p.segment, 3, seed);
      REQUIRE(out.futures.size() == 3);
      CHECK(p.builder->scene().roads.size() == roads_before + 2);
      std::set<std::int32_t> distinct;
      for (std::size_t k = 1; k < 3; ++k) {
        const auto j = static_cast<std::size_t>(out.branch_index[k]);
        distinct.insert(out.branch_index[k]);
        CHECK(j >= 5);
        CHECK(j <= 30);
        CHECK(out.futures[k].size() == 40);
        for (std::size_t i = 0; i <= j; ++i) CHECK(out.futures[k][i] == out.futures[0][i]);
        bool diverged = false;
        for (std::size_t i = j + 1; i < 40; ++i) diverged |= !(out.futures[k][i] == out.futures[0][i]);
        CHECK(diverged);
      }
      CHECK(distinct.size() == 2);
    }
  }

  TEST_CASE("five-future samples end on at least two roads") {
    SampleConfig cfg;
    cfg.n_gt_min = cfg.n_gt_max = 5;
    std::size_t forks = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const SampleBuild b = build_sample(demo_chain(), MapGenConfig{}, cfg, seed);
      if (b.sample.futures.size() < 5) continue;
      ++total;
      std::set<std::size_t> roads;
      for (const auto& f : b.world_futures) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < b.scene.roads.size(); ++r) {
          const double d = polyline_distance(f.points.back(), b.scene.roads[r].path);
          if (d < best_d) {
            best_d = d;
            best = r;
          }
        }
        roads.insert(best);
      }
      forks += roads.size() >= 2;
    }
    REQUIRE(total > 0);
    CHECK(forks == total);
  }

  TEST_CASE("lateral shift") {
    const Trajectory up = line({0, 0}, {0, 1}, 10);
    CHECK(lateral_shift(up, 0.0) == up);
    const Trajectory s = lateral_shift(up, 1.5);
    for (std::size_t i = 0; i < up.size(); ++i) {
      CHECK(s[i].x == doctest::Approx(1.5));
      CHECK(s[i].y == doctest::Approx(up[i].y));
    }
    const Trajectory east = line({0, 0}, {1, 0}, 5);
    CHECK(lateral_shift(east, 2.0)[3].y == doctest::Approx(-2.0));
  }

  TEST_CASE("shift draws lean right") {
    const SampleConfig cfg;
    Rng rng(8);
    double sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const double d = draw_lateral_shift(6.0, cfg, rng);
      CHECK(d >= cfg.shift_lo * 6.0);
      CHECK(d <= cfg.shift_hi * 6.0);
      sum += d;
    }
    const double mean = sum / n;
    CHECK(mean > 0.0);
    // Triangular mean (lo + mode + hi) / 3.
    CHECK(mean == doctest::Approx((cfg.shift_lo + cfg.shift_mode + cfg.shift_hi) * 6.0 / 3.0).epsilon(0.05));
  }

  TEST_CASE("heading-up crop is a translation") {
    SemanticMap scene = SemanticMap::blank(40, 40, 0.5);
    Rng rng(2);
    for (auto& l : scene.labels) l = static_cast<std::uint8_t>(rng.below(3));
    // Present on the corner shared by pixels (21,19) and (22,20): the crop center pixel (5,5) is scene (22,20).
    const Pose present{{1.0, -0.0}, kHeadingUp};
    std::size_t outside = 99;
    const SemanticMap crop = crop_context(scene, present, 10, &outside);
    CHECK(outside == 0);
    for (int r = 0; r < 10; ++r) {
      for (int c = 0; c < 10; ++c) CHECK(crop.at(c, r) == scene.at(c + 17, r + 15));
    }
    CHECK_THROWS_AS(crop_context(scene, present, 9), PreconditionError);
  }

  TEST_CASE("rotating scene and pose together leaves the crop unchanged") {
    SemanticMap a = SemanticMap::blank(60, 60, 0.5);
    Rng rng(4);
    for (auto& l : a.labels) l = static_cast<std::uint8_t>(rng.below(3));
    for (double phi : {0.3, -1.2, 2.5}) {
      SemanticMap b = a;
      b.origin = Pose{{0, 0}, kHeadingUp + phi};
      for (double h : {0.0, 0.7}) {
        const Pose pa{{0, 0}, kHeadingUp + h};
        const Pose pb{{0, 0}, kHeadingUp + h + phi};
        CHECK(crop_context(a, pa, 20) == [&] {
          SemanticMap c = crop_context(b, pb, 20);
          c.origin = pa;
          return c;
        }());
      }
    }
  }

  TEST_CASE("crop outside the scene is background and counted") {
    SemanticMap scene = SemanticMap::blank(10, 10, 0.5);
    std::fill(scene.labels.begin(), scene.labels.end(), 1);
    std::size_t outside = 0;
    const SemanticMap crop = crop_context(scene, Pose{}, 20, &outside);
    CHECK(outside == 300);
    CHECK(crop.at(0, 0) == MapClass::kBackground);
    CHECK(crop.at(10, 10) == MapClass::kRoad);
  }

  TEST_CASE("ablations change only their target") {
    const auto& chain = demo_chain();
    const MapGenConfig base_map;
    const SampleConfig base;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const SampleBuild ref = build_sample(chain, base_map, base, seed);

      MapGenConfig no_noise = base_map;
      no_noise.lidar_noise = false;
      const SampleBuild n = build_sample(chain, no_noise, base, seed);
      CHECK(n.sample.map == ref.clean_map);
      CHECK(n.sample.past == ref.sample.past);
      CHECK(n.sample.futures == ref.sample.futures);

      SampleConfig no_shift = base;
      no_shift.shift_enabled = false;
      const SampleBuild s = build_sample(chain, base_map, no_shift, seed);
      CHECK(s.sample.meta.shift == 0.0);
      CHECK(s.world_past == ref.world_past);
      CHECK(s.world_futures == ref.world_futures);
      CHECK(s.scene.canvas == ref.scene.canvas);

      MapGenConfig no_unreachable = base_map;
      no_unreachable.unreachable_roads = false;
      const SampleBuild u = build_sample(chain, no_unreachable, base, seed);
      CHECK(u.scene.unreachable.empty());
      CHECK(u.sample.past == ref.sample.past);
      CHECK(u.sample.futures == ref.sample.futures);
      CHECK(u.sample.meta.shift == ref.sample.meta.shift);
      const std::size_t reachable = ref.scene.roads.size() - ref.scene.unreachable.size();
      REQUIRE(u.scene.roads.size() == reachable);
      for (std::size_t r = 0; r < reachable; ++r) CHECK(u.scene.roads[r].path == ref.scene.roads[r].path);
    }
  }

  TEST_CASE("sample validation catches broken invariants") {
    MultimodalSample s = generate_sample(demo_chain(), MapGenConfig{}, SampleConfig{}, 5);
    MultimodalSample bad = s;
    bad.past.points.pop_back();
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
    bad = s;
    bad.futures.clear();
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
    bad = s;
    bad.past.points.back() = {0.1, 0.0};
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
    bad = s;
    bad.meta.branch_index.push_back(3);
    CHECK_THROWS_AS(bad.validate(), PreconditionError);

    SampleConfig cfg;
    cfg.n_gt_max = 6;
    CHECK_THROWS_AS(cfg.validate(), PreconditionError);
    cfg = {};
    cfg.crop_size = 361;
    CHECK_THROWS_AS(cfg.validate(), PreconditionError);
  }
}
