#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "synthtraj/mapgen.hpp"
#include "synthtraj/samples.hpp"

namespace synthtraj {

/// Binary PGM (P5) holding class ids as grey levels.
std::vector<std::uint8_t> encode_pgm(const SemanticMap& map);
/// Parses a P5 class-id image. Grey levels above the last class id are rejected.
SemanticMap decode_pgm(std::span<const std::uint8_t> data, double resolution = 0.5);
void write_pgm(const std::filesystem::path& path, const SemanticMap& map);
SemanticMap read_pgm(const std::filesystem::path& path, double resolution = 0.5);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(Rgb, Rgb) = default;
};

inline constexpr Rgb kRoadColor{128, 64, 128};
inline constexpr Rgb kSidewalkColor{244, 35, 232};
inline constexpr Rgb kBackgroundColor{0, 0, 0};
inline constexpr Rgb kPastColor{255, 0, 0};
inline constexpr Rgb kFutureColor{0, 255, 0};
inline constexpr Rgb kPredictionColor{0, 128, 255};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB

  static RgbImage blank(int width, int height);
  Rgb get(int col, int row) const;
  void set(int col, int row, Rgb c);
};

RgbImage colorize(const SemanticMap& map, int scale = 1);

/// Draws a heading-up trajectory (meters) over a colorized sample map.
void draw_trajectory(RgbImage& img, const MultimodalSample& sample, const Trajectory& local, Rgb color,
                     int scale = 1);

/// False-color map with the past in red, ground-truth futures in green and
/// optional predictions in blue.
RgbImage render_sample(const MultimodalSample& sample, std::span<const Trajectory> predictions = {}, int scale = 1);

std::vector<std::uint8_t> encode_ppm(const RgbImage& img);
void write_ppm(const std::filesystem::path& path, const RgbImage& img);

}  // namespace synthtraj
