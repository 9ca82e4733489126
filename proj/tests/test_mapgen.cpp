#include <doctest.h>

#include <set>

#include "support.hpp"
#include "synthtraj/errors.hpp"

using namespace synthtraj;
using namespace synthtraj::testing;

namespace {

constexpr double kBand = kRasterTolerance + 1e-9;

// Every pixel clearly inside radius r is `inside`, every pixel clearly outside is not.
void check_stroke(const SemanticMap& map, const Trajectory& path, double r, MapClass cls) {
  std::size_t wrong = 0;
  for (int row = 0; row < map.height; ++row) {
    for (int col = 0; col < map.width; ++col) {
      const double d = oracle::pixel_to_polyline(map, col, row, path);
      const bool is = map.at(col, row) == cls;
      if (d <= r - kBand && !is) ++wrong;
      if (d > r + kBand && is) ++wrong;
    }
  }
  CHECK(wrong == 0);
}

SemanticMap small_map() { return SemanticMap::blank(80, 80, 0.5); }

}  // namespace

TEST_SUITE("mapgen") {
  TEST_CASE("map frame conventions") {
    const SemanticMap m = SemanticMap::blank(10, 8, 0.5);
    CHECK(m.pixel_of({0, 0}) == PixelIndex{5, 4});
    CHECK(m.pixel_of({-0.01, 0.01}) == PixelIndex{4, 3});
    const Vec2 c = m.pixel_center_world(5, 4);
    CHECK(c.x == doctest::Approx(0.25));
    CHECK(c.y == doctest::Approx(-0.25));
    CHECK_FALSE(m.pixel_of({100, 0}).has_value());
    CHECK(m.class_at({100, 0}) == MapClass::kBackground);

    const SemanticMap rot = SemanticMap::blank(10, 10, 1.0, Pose{{3, 4}, 0.0});
    // Heading +x: world +x is "up" in the map, world +y is to the left.
    CHECK(rot.pixel_of({4.5, 4}) == PixelIndex{5, 3});
    CHECK(rot.pixel_of({3, 5.5}) == PixelIndex{3, 5});
  }

  TEST_CASE("blank, one-hot and validation") {
    CHECK_THROWS_AS(SemanticMap::blank(-1, 2), PreconditionError);
    CHECK_THROWS_AS(SemanticMap::blank(2, 2, 0.0), PreconditionError);
    SemanticMap m = SemanticMap::blank(3, 2);
    m.set(1, 0, MapClass::kRoad);
    m.set(2, 1, MapClass::kSidewalk);
    const auto oh = m.one_hot();
    REQUIRE(oh.size() == 18);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(oh[i * 3] + oh[i * 3 + 1] + oh[i * 3 + 2] == 1);
    }
    CHECK(oh[1 * 3 + 1] == 1);
    CHECK(oh[5 * 3 + 2] == 1);
    CHECK_NOTHROW(m.validate());
    m.labels[0] = 7;
    CHECK_THROWS_AS(m.validate(), PreconditionError);
  }

  TEST_CASE("horizontal 6 m road covers 6 px and not 7") {
    SemanticMap m = small_map();
    const Trajectory path{{{-15, 0.25}, {15, 0.25}}};
    REQUIRE(rasterize_road(m, path, 6.0));
    check_stroke(m, path, 6.0, MapClass::kRoad);
    // Column 40, path at row 39.5 (pixel centers at y = row + 0.5): 6 px above and below.
    CHECK(m.at(40, 39 - 6 + 1) == MapClass::kRoad);
    CHECK(m.at(40, 39 + 6) == MapClass::kRoad);
    CHECK(m.at(40, 39 - 7) == MapClass::kBackground);
    CHECK(m.at(40, 39 + 7) == MapClass::kBackground);
  }

  TEST_CASE("0.5 m road is a one-pixel-radius stroke") {
    SemanticMap m = small_map();
    const Trajectory path{{{-10, 0.25}, {10, 0.25}}};
    rasterize_road(m, path, 0.5);
    check_stroke(m, path, 0.5, MapClass::kRoad);
    int count = 0;
    for (int r = 0; r < m.height; ++r) count += m.at(40, r) == MapClass::kRoad;
    CHECK(count == 1);
  }

  TEST_CASE("random polylines match the distance oracle") {
    Rng rng(21);
    for (int c = 0; c < 12; ++c) {
      SemanticMap m = small_map();
      Trajectory path = random_path(rng, 25);
      for (auto& p : path.points) p = 0.3 * p;
      const double width = rng.uniform(0.5, 8.0);
      rasterize_road(m, path, width);
      check_stroke(m, path, width / 2.0 / m.resolution, MapClass::kRoad);
    }
  }

  TEST_CASE("crossing strokes label each pixel once and are idempotent") {
    SemanticMap m = small_map();
    const Trajectory a{{{-15, 0}, {15, 0}}}, b{{{0, -15}, {0, 15}}};
    rasterize_road(m, a, 6.0);
    rasterize_road(m, b, 6.0);
    for (auto l : m.labels) CHECK((l == 0 || l == 1));
    SemanticMap again = m;
    rasterize_road(again, a, 6.0);
    rasterize_road(again, b, 6.0);
    CHECK(again == m);
  }

  TEST_CASE("path outside the raster is a no-op") {
    SemanticMap m = small_map();
    const SemanticMap before = m;
    CHECK_FALSE(rasterize_road(m, Trajectory{{{500, 500}, {510, 500}}}, 6.0));
    CHECK(m == before);
    CHECK_THROWS_AS(rasterize_road(m, Trajectory{{{0, 0}, {1, 0}}}, 0.0), PreconditionError);
  }

  TEST_CASE("straight sidewalks form a 3 px band") {
    SemanticMap m = small_map();
    const Trajectory path{{{-30, 0.25}, {30, 0.25}}};
    add_sidewalks(m, path, 6.0, 1.5, false, 1);
    rasterize_road(m, path, 6.0);
    std::size_t wrong = 0;
    for (int row = 0; row < m.height; ++row) {
      for (int col = 0; col < m.width; ++col) {
        const double d = oracle::pixel_to_polyline(m, col, row, path);
        const MapClass want = d <= 6.0 ? MapClass::kRoad : d <= 9.0 ? MapClass::kSidewalk : MapClass::kBackground;
        if (m.at(col, row) != want && std::abs(d - 6.0) > kBand && std::abs(d - 9.0) > kBand) ++wrong;
      }
    }
    CHECK(wrong == 0);
    int side = 0;
    for (int r = 0; r < m.height; ++r) side += m.at(40, r) == MapClass::kSidewalk;
    CHECK(side == 6);
  }

  TEST_CASE("sidewalks without jitter ignore the seed") {
    SemanticMap a = small_map(), b = small_map();
    const Trajectory path{{{-10, -10}, {0, 3}, {12, 5}}};
    add_sidewalks(a, path, 6.0, 1.5, false, 1);
    add_sidewalks(b, path, 6.0, 1.5, false, 99);
    CHECK(a == b);
  }

  TEST_CASE("sidewalks never overwrite road") {
    SemanticMap m = small_map();
    const Trajectory a{{{-15, 0}, {15, 0}}}, b{{{0, -15}, {0, 15}}};
    rasterize_road(m, a, 6.0);
    const SemanticMap road = m;
    add_sidewalks(m, b, 6.0, 1.5, true, 3);
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
      if (road.labels[i] == 1) CHECK(m.labels[i] == 1);
    }
  }

  TEST_CASE("jittered sidewalks stay between 0.3 and 1 of the width") {
    Rng rng(5);
    for (int c = 0; c < 6; ++c) {
      SemanticMap m = SemanticMap::blank(120, 120, 0.5);
      Trajectory path = random_path(rng, 30);
      for (auto& p : path.points) p = 0.4 * p;
      add_sidewalks(m, path, 6.0, 3.0, true, rng.next_u64());
      std::size_t wrong = 0;
      for (int row = 0; row < m.height; ++row) {
        for (int col = 0; col < m.width; ++col) {
          const double d = oracle::pixel_to_polyline(m, col, row, path);
          const bool side = m.at(col, row) == MapClass::kSidewalk;
          if (side && (d <= 6.0 - kBand || d > 12.0 + kBand)) ++wrong;
          if (!side && d > 6.0 + kBand && d <= 6.0 + 0.3 * 6.0 - kBand) ++wrong;
        }
      }
      CHECK(wrong == 0);
    }
  }

  TEST_CASE("lidar noise: zero intensity and protected center") {
    SemanticMap m = SemanticMap::blank(100, 100);
    std::fill(m.labels.begin(), m.labels.end(), 1);
    SemanticMap z = m;
    CHECK(apply_lidar_noise(z, 1, 0.0) == 0);
    CHECK(z == m);
    const double big_r = std::hypot(50.0, 50.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      SemanticMap n = m;
      apply_lidar_noise(n, seed, 1.0);
      CHECK(n.at(50, 50) == MapClass::kRoad);
      for (int r = 0; r < 100; ++r) {
        for (int c = 0; c < 100; ++c) {
          if (std::hypot(c + 0.5 - 50.0, r + 0.5 - 50.0) <= 0.6 * big_r) CHECK(n.at(c, r) == MapClass::kRoad);
        }
      }
    }
    CHECK_THROWS_AS(apply_lidar_noise(z, 1, 1.5), PreconditionError);
  }

  TEST_CASE("lidar noise flip rate in the outer annulus") {
    SemanticMap m = SemanticMap::blank(200, 200);
    std::fill(m.labels.begin(), m.labels.end(), 1);
    const double big_r = std::hypot(100.0, 100.0);
    double flipped = 0, total = 0, expected = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      SemanticMap n = m;
      apply_lidar_noise(n, seed, 1.0);
      for (int r = 0; r < 200; ++r) {
        for (int c = 0; c < 200; ++c) {
          const double d = std::hypot(c + 0.5 - 100.0, r + 0.5 - 100.0);
          if (d < 0.9 * big_r) continue;
          ++total;
          flipped += n.at(c, r) == MapClass::kBackground;
          expected += std::clamp((d - 0.6 * big_r) / (0.4 * big_r), 0.0, 1.0);
        }
      }
    }
    CHECK(flipped / total >= 0.7);
    CHECK(std::abs(flipped - expected) / total < 0.02);
  }

  TEST_CASE("single-road scenes") {
    MapGenConfig cfg;
    cfg.branching_factor_max = 1;
    cfg.unreachable_roads = false;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Scene s = build_scene(demo_chain(), cfg, seed);
      CHECK(s.roads.size() == 1);
      CHECK(s.branches.empty());
      CHECK(s.unreachable.empty());
    }
  }

  TEST_CASE("scenes are deterministic in the seed") {
    const MapGenConfig cfg;
    const Scene a = build_scene(demo_chain(), cfg, 4);
    const Scene b = build_scene(demo_chain(), cfg, 4);
    const Scene c = build_scene(demo_chain(), cfg, 5);
    CHECK(a.canvas == b.canvas);
    CHECK_FALSE(a.canvas == c.canvas);
  }

  TEST_CASE("scene roads are on road and unreachable roads are disconnected") {
    const MapGenConfig cfg;
    std::size_t with_unreachable = 0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const Scene s = build_scene(demo_chain(), cfg, seed);
      CHECK(s.branches.size() + 1 + s.unreachable.size() == s.roads.size());
      CHECK(s.branches.size() + 1 <= static_cast<std::size_t>(cfg.branching_factor_max));
      for (const auto& road : s.roads) {
        for (const auto& p : road.path.points) {
          if (auto px = s.canvas.pixel_of(p)) CHECK(s.canvas.at(px->col, px->row) == MapClass::kRoad);
        }
        CHECK((road.width == cfg.lane_width || road.width == 2.0 * cfg.lane_width));
      }
      const auto label = oracle::components(s.canvas, MapClass::kRoad);
      auto label_of = [&](Vec2 p) -> int {
        auto px = s.canvas.pixel_of(p);
        return px ? label[static_cast<std::size_t>(px->row) * s.canvas.width + px->col] : -1;
      };
      std::set<int> reachable;
      for (const auto& road : s.roads) {
        if (!road.reachable) continue;
        for (const auto& p : road.path.points) {
          if (label_of(p) >= 0) reachable.insert(label_of(p));
        }
      }
      CHECK(reachable.size() == 1);
      for (const auto& u : s.unreachable) {
        for (const auto& p : u.points) {
          if (label_of(p) >= 0) CHECK(reachable.count(label_of(p)) == 0);
        }
      }
      with_unreachable += !s.unreachable.empty();
    }
    CHECK(with_unreachable >= 6);
  }

  TEST_CASE("no sidewalk pixel lies inside a road stroke") {
    const Scene s = build_scene(demo_chain(), MapGenConfig{}, 12);
    Rng rng(1);
    std::vector<PixelIndex> side;
    for (int r = 0; r < s.canvas.height; ++r) {
      for (int c = 0; c < s.canvas.width; ++c) {
        if (s.canvas.at(c, r) == MapClass::kSidewalk) side.push_back({c, r});
      }
    }
    REQUIRE(!side.empty());
    for (int k = 0; k < 2000; ++k) {
      const PixelIndex p = side[rng.below(side.size())];
      for (const auto& road : s.roads) {
        const double d = oracle::pixel_to_polyline(s.canvas, p.col, p.row, road.path);
        CHECK(d > road.width / 2.0 / s.canvas.resolution - kBand);
      }
    }
  }

  TEST_CASE("config validation") {
    MapGenConfig bad;
    bad.lane_width = 0.0;
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
    bad = {};
    bad.branching_factor_max = 0;
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
    bad = {};
    bad.double_width_prob = 1.5;
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
  }
}
