#include <doctest.h>

#include <string>

#include "support.hpp"
#include "synthtraj/errors.hpp"
#include "synthtraj/image_io.hpp"

using namespace synthtraj;
using namespace synthtraj::testing;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_SUITE("image_io") {
  TEST_CASE("pgm round trip") {
    Rng rng(1);
    SemanticMap m = SemanticMap::blank(13, 7);
    for (auto& l : m.labels) l = static_cast<std::uint8_t>(rng.below(3));
    const auto bytes = encode_pgm(m);
    const std::string header = "P5\n13 7\n255\n";
    CHECK(std::string(bytes.begin(), bytes.begin() + header.size()) == header);
    CHECK(bytes.size() == header.size() + 13 * 7);
    CHECK(decode_pgm(bytes) == m);

    const auto path = temp_dir("pgm") / "m.pgm";
    write_pgm(path, m);
    CHECK(read_pgm(path) == m);
  }

  TEST_CASE("pgm header comments and rejections") {
    auto ok = bytes_of("P5\n# comment\n2 1\n255\n");
    ok.push_back(1);
    ok.push_back(2);
    const SemanticMap m = decode_pgm(ok, 0.25);
    CHECK(m.resolution == 0.25);
    CHECK(m.at(0, 0) == MapClass::kRoad);
    CHECK(m.at(1, 0) == MapClass::kSidewalk);

    auto bad_class = bytes_of("P5 1 1 255\n");
    bad_class.push_back(3);
    CHECK_THROWS_AS(decode_pgm(bad_class), DataError);
    CHECK_THROWS_AS(decode_pgm(bytes_of("P2 1 1 255\n0")), DataError);
    CHECK_THROWS_AS(decode_pgm(bytes_of("P5 2 2 255\n\x01")), DataError);
    CHECK_THROWS_AS(decode_pgm(bytes_of("P5 0 2 255\n")), DataError);
    CHECK_THROWS_AS(decode_pgm(bytes_of("P5 1 1 65535\n\x00\x00")), DataError);
    CHECK_THROWS_AS(decode_pgm(bytes_of("P5 1")), DataError);
  }

  TEST_CASE("colorize uses the class palette") {
    SemanticMap m = SemanticMap::blank(3, 1);
    m.set(1, 0, MapClass::kRoad);
    m.set(2, 0, MapClass::kSidewalk);
    const RgbImage img = colorize(m, 2);
    CHECK(img.width == 6);
    CHECK(img.height == 2);
    CHECK(img.get(0, 1) == kBackgroundColor);
    CHECK(img.get(3, 1) == kRoadColor);
    CHECK(img.get(5, 0) == kSidewalkColor);
    CHECK_THROWS_AS(colorize(m, 0), PreconditionError);

    const auto ppm = encode_ppm(img);
    const std::string header = "P6\n6 2\n255\n";
    CHECK(std::string(ppm.begin(), ppm.begin() + header.size()) == header);
    CHECK(ppm.size() == header.size() + 6 * 2 * 3);
  }

  TEST_CASE("render draws past over futures at the map center") {
    MultimodalSample s;
    s.map = SemanticMap::blank(40, 40);
    s.past = line({0, -9.5}, {0, 0.5}, 20);
    s.futures.push_back(line({0.5, 0.5}, {0, 0.5}, 40));
    s.meta.branch_index = {-1};
    REQUIRE_NOTHROW(s.validate());
    const RgbImage img = render_sample(s);
    CHECK(img.get(20, 20) == kPastColor);
    CHECK(img.get(21, 18) == kFutureColor);
    CHECK(img.get(5, 5) == kBackgroundColor);

    const std::vector<Trajectory> preds{line({-3, 0.5}, {0, 0.5}, 40)};
    const RgbImage with = render_sample(s, preds);
    CHECK(with.get(14, 18) == kPredictionColor);
  }
}
