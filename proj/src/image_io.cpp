#include "synthtraj/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "synthtraj/binary_io.hpp"
#include "synthtraj/errors.hpp"

namespace synthtraj {

std::vector<std::uint8_t> encode_pgm(const SemanticMap& map) {
  map.validate();
  ByteWriter w;
  w.text("P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n255\n");
  w.bytes(map.labels);
  return w.take();
}

namespace {

// Reads one header token, skipping whitespace and '#' comments.
std::string pgm_token(std::span<const std::uint8_t> d, std::size_t& pos) {
  while (pos < d.size()) {
    if (d[pos] == '#') {
      while (pos < d.size() && d[pos] != '\n') ++pos;
    } else if (std::isspace(d[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < d.size() && !std::isspace(d[pos]) && d[pos] != '#') tok.push_back(static_cast<char>(d[pos++]));
  if (tok.empty()) throw DataError("truncated PGM header");
  return tok;
}

int pgm_int(std::span<const std::uint8_t> d, std::size_t& pos) {
  const std::string tok = pgm_token(d, pos);
  if (!std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) ||
      tok.size() > 6) {
    throw DataError("bad PGM header field '" + tok + "'");
  }
  return std::stoi(tok);
}

}  // namespace

SemanticMap decode_pgm(std::span<const std::uint8_t> data, double resolution) {
  std::size_t pos = 0;
  if (pgm_token(data, pos) != "P5") throw DataError("not a binary PGM (P5)");
  const int w = pgm_int(data, pos);
  const int h = pgm_int(data, pos);
  const int maxval = pgm_int(data, pos);
  if (w <= 0 || h <= 0) throw DataError("PGM has an empty raster");
  if (maxval <= 0 || maxval > 255) throw DataError("PGM must use 8-bit samples");
  if (pos >= data.size() || !std::isspace(data[pos])) throw DataError("truncated PGM header");
  ++pos;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (data.size() - pos < n) throw DataError("truncated PGM raster");
  SemanticMap map = SemanticMap::blank(w, h, resolution);
  std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(pos), n, map.labels.begin());
  for (auto v : map.labels) {
    if (v >= kMapClassCount) throw DataError("PGM value " + std::to_string(v) + " is not a class id");
  }
  return map;
}

void write_pgm(const std::filesystem::path& path, const SemanticMap& map) {
  write_file(path.string(), encode_pgm(map));
}

SemanticMap read_pgm(const std::filesystem::path& path, double resolution) {
  return decode_pgm(read_file(path.string()), resolution);
}

RgbImage RgbImage::blank(int width, int height) {
  if (width < 0 || height < 0) throw PreconditionError("negative image size");
  return {width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * 3, 0)};
}

Rgb RgbImage::get(int col, int row) const {
  const std::size_t i = (static_cast<std::size_t>(row) * width + col) * 3;
  return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

void RgbImage::set(int col, int row, Rgb c) {
  if (col < 0 || row < 0 || col >= width || row >= height) return;
  const std::size_t i = (static_cast<std::size_t>(row) * width + col) * 3;
  pixels[i] = c.r;
  pixels[i + 1] = c.g;
  pixels[i + 2] = c.b;
}

RgbImage colorize(const SemanticMap& map, int scale) {
  if (scale < 1) throw PreconditionError("scale must be >= 1");
  RgbImage img = RgbImage::blank(map.width * scale, map.height * scale);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      switch (map.at(c / scale, r / scale)) {
        case MapClass::kRoad: img.set(c, r, kRoadColor); break;
        case MapClass::kSidewalk: img.set(c, r, kSidewalkColor); break;
        case MapClass::kBackground: img.set(c, r, kBackgroundColor); break;
      }
    }
  }
  return img;
}

void draw_trajectory(RgbImage& img, const MultimodalSample& sample, const Trajectory& local, Rgb color, int scale) {
  const double res = sample.map.resolution;
  auto to_img = [&](Vec2 p) {
    return Vec2{(p.x / res + sample.map.width / 2.0) * scale, (sample.map.height / 2.0 - p.y / res) * scale};
  };
  for (std::size_t i = 0; i < local.size(); ++i) {
    const Vec2 a = to_img(local[i]);
    const Vec2 b = i + 1 < local.size() ? to_img(local[i + 1]) : a;
    const int steps = std::max(1, static_cast<int>(std::ceil(distance(a, b) * 2.0)));
    for (int s = 0; s <= steps; ++s) {
      const Vec2 p = a + (static_cast<double>(s) / steps) * (b - a);
      img.set(static_cast<int>(std::floor(p.x)), static_cast<int>(std::floor(p.y)), color);
    }
  }
}

RgbImage render_sample(const MultimodalSample& sample, std::span<const Trajectory> predictions, int scale) {
  RgbImage img = colorize(sample.map, scale);
  for (const auto& f : sample.futures) draw_trajectory(img, sample, f, kFutureColor, scale);
  for (const auto& p : predictions) draw_trajectory(img, sample, p, kPredictionColor, scale);
  draw_trajectory(img, sample, sample.past, kPastColor, scale);
  return img;
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  ByteWriter w;
  w.text("P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n");
  w.bytes(img.pixels);
  return w.take();
}

void write_ppm(const std::filesystem::path& path, const RgbImage& img) { write_file(path.string(), encode_ppm(img)); }

}  // namespace synthtraj
