#include "synthtraj/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "synthtraj/binary_io.hpp"
#include "synthtraj/errors.hpp"
#include "synthtraj/image_io.hpp"

namespace synthtraj {

namespace {

constexpr char kDatasetMagic[] = "TJDS";
constexpr char kChainMagic[] = "TJMC";

void put_trajectory(ByteWriter& w, const Trajectory& t) {
  w.u32(static_cast<std::uint32_t>(t.size()));
  w.f64(t.rate_hz);
  for (const auto& p : t.points) {
    w.f64(p.x);
    w.f64(p.y);
  }
}

Trajectory get_trajectory(ByteReader& r) {
  Trajectory t;
  const std::uint32_t n = r.u32();
  t.rate_hz = r.f64();
  if (n > r.remaining() / 16) throw DataError("trajectory length exceeds record");
  t.points.resize(n);
  for (auto& p : t.points) {
    p.x = r.f64();
    p.y = r.f64();
  }
  return t;
}

void expect_magic(ByteReader& r, const char* magic) {
  if (r.text(4) != std::string(magic, 4)) throw DataError(std::string("bad magic, expected ") + magic);
}

}  // namespace

std::vector<std::uint8_t> encode_sample(const MultimodalSample& s) {
  ByteWriter w;
  w.u64(s.meta.seed);
  w.u64(s.meta.scene_id);
  w.u8(static_cast<std::uint8_t>(s.meta.source));
  w.u32(s.meta.warnings);
  w.f64(s.meta.shift);
  put_trajectory(w, s.past);
  w.u8(static_cast<std::uint8_t>(s.futures.size()));
  for (const auto& f : s.futures) put_trajectory(w, f);
  w.u8(static_cast<std::uint8_t>(s.meta.branch_index.size()));
  for (auto b : s.meta.branch_index) w.i32(b);
  w.i32(s.map.width);
  w.i32(s.map.height);
  w.f64(s.map.resolution);
  w.f64(s.map.origin.position.x);
  w.f64(s.map.origin.position.y);
  w.f64(s.map.origin.heading);
  w.bytes(s.map.labels);
  return w.take();
}

MultimodalSample decode_sample(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  MultimodalSample s;
  s.meta.seed = r.u64();
  s.meta.scene_id = r.u64();
  const std::uint8_t source = r.u8();
  if (source > 1) throw DataError("unknown sample source " + std::to_string(source));
  s.meta.source = static_cast<SampleSource>(source);
  s.meta.warnings = r.u32();
  s.meta.shift = r.f64();
  s.past = get_trajectory(r);
  const std::uint8_t nf = r.u8();
  for (std::uint8_t i = 0; i < nf; ++i) s.futures.push_back(get_trajectory(r));
  const std::uint8_t nb = r.u8();
  for (std::uint8_t i = 0; i < nb; ++i) s.meta.branch_index.push_back(r.i32());
  s.map.width = r.i32();
  s.map.height = r.i32();
  if (s.map.width < 0 || s.map.height < 0) throw DataError("negative map size");
  s.map.resolution = r.f64();
  s.map.origin.position.x = r.f64();
  s.map.origin.position.y = r.f64();
  s.map.origin.heading = r.f64();
  const std::size_t n = static_cast<std::size_t>(s.map.width) * static_cast<std::size_t>(s.map.height);
  auto labels = r.bytes(n);
  s.map.labels.assign(labels.begin(), labels.end());
  if (r.remaining() != 0) throw DataError("trailing bytes after sample record");
  try {
    s.validate();
  } catch (const PreconditionError& e) {
    throw DataError(std::string("invalid sample record: ") + e.what());
  }
  return s;
}

std::vector<std::uint8_t> encode_dataset(std::span<const MultimodalSample> samples, const nlohmann::json& config) {
  ByteWriter records;
  nlohmann::json manifest;
  auto seeds = nlohmann::json::array();
  auto crcs = nlohmann::json::array();
  for (const auto& s : samples) {
    const auto rec = encode_sample(s);
    records.u32(static_cast<std::uint32_t>(rec.size()));
    records.bytes(rec);
    seeds.push_back(s.meta.seed);
    crcs.push_back(crc32(rec));
  }
  manifest["version"] = kDatasetVersion;
  manifest["count"] = samples.size();
  manifest["seeds"] = std::move(seeds);
  manifest["config"] = config;
  manifest["record_crc32"] = std::move(crcs);
  manifest["payload_crc32"] = crc32(records.data());
  const std::string mtext = manifest.dump();

  ByteWriter w;
  w.text(std::string_view(kDatasetMagic, 4));
  w.u16(kDatasetVersion);
  w.u16(0);
  w.u64(samples.size());
  w.u32(static_cast<std::uint32_t>(mtext.size()));
  w.text(mtext);
  w.bytes(records.data());
  w.u32(crc32(w.data()));
  return w.take();
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw DataError("dataset archive too short");
  const auto body = bytes.first(bytes.size() - 4);
  ByteReader footer(bytes.last(4));
  if (footer.u32() != crc32(body)) throw DataError("dataset checksum mismatch");

  ByteReader r(body);
  expect_magic(r, kDatasetMagic);
  const std::uint16_t version = r.u16();
  if (version != kDatasetVersion) throw DataError("unsupported dataset version " + std::to_string(version));
  r.u16();
  const std::uint64_t count = r.u64();
  const std::uint32_t mlen = r.u32();
  Dataset ds;
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(r.text(mlen));
    ds.manifest.version = m.at("version").get<std::uint16_t>();
    ds.manifest.count = m.at("count").get<std::uint64_t>();
    ds.manifest.seeds = m.at("seeds").get<std::vector<std::uint64_t>>();
    ds.manifest.config = m.at("config");
    ds.manifest.record_crcs = m.at("record_crc32").get<std::vector<std::uint32_t>>();
    ds.manifest.payload_crc = m.at("payload_crc32").get<std::uint32_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed dataset manifest: ") + e.what());
  }
  if (ds.manifest.count != count || ds.manifest.record_crcs.size() != count || ds.manifest.seeds.size() != count) {
    throw DataError("dataset manifest does not match record count");
  }
  if (crc32(body.subspan(r.position())) != ds.manifest.payload_crc) throw DataError("payload checksum mismatch");
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t len = r.u32();
    const auto rec = r.bytes(len);
    if (crc32(rec) != ds.manifest.record_crcs[i]) {
      throw DataError("record " + std::to_string(i) + " checksum mismatch");
    }
    ds.samples.push_back(decode_sample(rec));
    if (ds.samples.back().meta.seed != ds.manifest.seeds[i]) {
      throw DataError("record " + std::to_string(i) + " seed differs from manifest");
    }
  }
  if (r.remaining() != 0) throw DataError("trailing bytes in dataset archive");
  return ds;
}

DatasetManifest write_dataset(const std::filesystem::path& path, std::span<const MultimodalSample> samples,
                              const nlohmann::json& config) {
  const auto bytes = encode_dataset(samples, config);
  write_file(path.string(), bytes);
  return decode_dataset(bytes).manifest;
}

Dataset read_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path.string())); }

std::vector<std::uint8_t> encode_chain(const MarkovChain& chain) {
  const ClusterModel& cm = chain.clusters();
  ByteWriter w;
  w.text(std::string_view(kChainMagic, 4));
  w.u16(kChainFileVersion);
  w.u16(0);
  w.u32(static_cast<std::uint32_t>(chain.order()));
  w.f64(cm.theta_scale);
  w.u32(static_cast<std::uint32_t>(cm.size()));
  for (const auto& c : cm.centroids) {
    w.f64(c.rho);
    w.f64(c.theta);
  }
  w.u8(cm.members.empty() ? 0 : 1);
  for (const auto& m : cm.members) {
    w.u32(static_cast<std::uint32_t>(m.size()));
    for (const auto& o : m) {
      w.f64(o.rho);
      w.f64(o.theta);
    }
  }
  w.u32(static_cast<std::uint32_t>(chain.state_count()));
  for (const auto& s : chain.states()) {
    for (auto id : s.gram) w.u16(id);
  }
  for (std::size_t i = 0; i < chain.state_count(); ++i) {
    const auto row = chain.transitions(i);
    w.u32(static_cast<std::uint32_t>(row.size()));
    for (const auto& t : row) {
      w.u32(t.target);
      w.f64(t.probability);
    }
  }
  for (double p : chain.initial_distribution()) w.f64(p);
  w.u32(crc32(w.data()));
  return w.take();
}

MarkovChain decode_chain(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw DataError("chain file too short");
  const auto body = bytes.first(bytes.size() - 4);
  ByteReader footer(bytes.last(4));
  if (footer.u32() != crc32(body)) throw DataError("chain file checksum mismatch");
  ByteReader r(body);
  expect_magic(r, kChainMagic);
  const std::uint16_t version = r.u16();
  if (version != kChainFileVersion) throw DataError("unsupported chain file version " + std::to_string(version));
  r.u16();
  const int order = static_cast<int>(r.u32());
  if (order < 1 || order > 8) throw DataError("chain order out of range");
  ClusterModel cm;
  cm.theta_scale = r.f64();
  const std::uint32_t c = r.u32();
  if (c > r.remaining() / 16) throw DataError("cluster count exceeds file");
  cm.centroids.resize(c);
  for (auto& o : cm.centroids) {
    o.rho = r.f64();
    o.theta = r.f64();
  }
  if (r.u8() != 0) {
    cm.members.resize(c);
    for (auto& m : cm.members) {
      const std::uint32_t n = r.u32();
      if (n > r.remaining() / 16) throw DataError("member count exceeds file");
      m.resize(n);
      for (auto& o : m) {
        o.rho = r.f64();
        o.theta = r.f64();
      }
    }
  }
  const std::uint32_t ns = r.u32();
  if (ns > r.remaining() / (2 * static_cast<std::size_t>(order))) throw DataError("state count exceeds file");
  std::vector<ChainState> states(ns);
  for (auto& s : states) {
    s.gram.resize(static_cast<std::size_t>(order));
    for (auto& id : s.gram) id = r.u16();
  }
  std::vector<std::vector<Transition>> rows(ns);
  for (auto& row : rows) {
    const std::uint32_t n = r.u32();
    if (n > r.remaining() / 12) throw DataError("row length exceeds file");
    row.resize(n);
    for (auto& t : row) {
      t.target = r.u32();
      t.probability = r.f64();
    }
  }
  std::vector<double> initial(ns);
  for (auto& p : initial) p = r.f64();
  if (r.remaining() != 0) throw DataError("trailing bytes in chain file");
  try {
    return MarkovChain::from_parts(std::move(cm), order, std::move(states), std::move(rows), std::move(initial));
  } catch (const PreconditionError& e) {
    throw DataError(std::string("invalid chain file: ") + e.what());
  }
}

void save_chain(const std::filesystem::path& path, const MarkovChain& chain) {
  write_file(path.string(), encode_chain(chain));
}

MarkovChain load_chain(const std::filesystem::path& path) { return decode_chain(read_file(path.string())); }

std::string format_trajectory_text(const Trajectory& t) {
  std::string out;
  char buf[96];
  for (std::size_t i = 0; i < t.size(); ++i) {
    const int n = std::snprintf(buf, sizeof buf, "%zu %.17g %.17g\n", i, t[i].x, t[i].y);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

std::optional<std::string> parse_trajectory_text(const std::string& text, Trajectory& out) {
  out = Trajectory{};
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::optional<long long> last_index;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::replace(line.begin(), line.end(), '\t', ' ');
    std::replace(line.begin(), line.end(), '\r', ' ');
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (tok.size() != 3) return where + "expected 3 fields (index x y), got " + std::to_string(tok.size());
    long long index = 0;
    double xy[2];
    {
      const auto& s = tok[0];
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), index);
      if (ec != std::errc() || p != s.data() + s.size()) return where + "bad index '" + s + "'";
    }
    for (int k = 0; k < 2; ++k) {
      const auto& s = tok[1 + k];
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), xy[k]);
      if (ec != std::errc() || p != s.data() + s.size()) return where + "bad coordinate '" + s + "'";
      if (!std::isfinite(xy[k])) return where + "non-finite coordinate";
    }
    if (last_index && index != *last_index + 1) return where + "index " + std::to_string(index) + " is not consecutive";
    last_index = index;
    out.points.push_back({xy[0], xy[1]});
  }
  if (out.size() < 2) return "fewer than 2 points";
  return std::nullopt;
}

IngestResult TextSplitAdapter::load(const std::filesystem::path& dir) const {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("split directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".txt" || ext == ".csv")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  IngestResult out;
  for (const auto& f : files) {
    std::ifstream is(f, std::ios::binary);
    std::stringstream buf;
    buf << is.rdbuf();
    RealRecord rec;
    rec.name = f.stem().string();
    if (auto why = parse_trajectory_text(buf.str(), rec.trajectory)) {
      out.rejected.push_back({f.filename().string(), *why});
      continue;
    }
    auto map_path = f;
    map_path.replace_extension(".pgm");
    if (fs::exists(map_path)) {
      try {
        rec.map = read_pgm(map_path);
      } catch (const DataError& e) {
        out.rejected.push_back({f.filename().string(), std::string("map: ") + e.what()});
        continue;
      }
      if (rec.map->width % 2 != 0 || rec.map->height % 2 != 0) {
        out.rejected.push_back({f.filename().string(), "map: size must be even"});
        continue;
      }
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

IngestResult ingest_real(const std::filesystem::path& split_dir, const SplitAdapter& adapter) {
  IngestResult r = adapter.load(split_dir);
  spdlog::info("ingested {} trajectories from {} ({} rejected)", r.records.size(), split_dir.string(),
               r.rejected.size());
  for (const auto& rej : r.rejected) spdlog::warn("rejected {}: {}", rej.file, rej.reason);
  return r;
}

MultimodalSample real_to_sample(const RealRecord& record, std::uint64_t id) {
  const Trajectory& t = record.trajectory;
  if (t.size() < kPastLength + kFutureLength) {
    throw PreconditionError(record.name + ": need " + std::to_string(kPastLength + kFutureLength) + " points, have " +
                            std::to_string(t.size()));
  }
  Trajectory window;
  window.rate_hz = t.rate_hz;
  window.points.assign(t.points.begin(), t.points.begin() + static_cast<std::ptrdiff_t>(kPastLength + kFutureLength));
  const auto [local, frame] = normalize_heading_up(window, kPastLength - 1);
  MultimodalSample s;
  s.past.rate_hz = t.rate_hz;
  s.past.points.assign(local.points.begin(), local.points.begin() + static_cast<std::ptrdiff_t>(kPastLength));
  Trajectory fut;
  fut.rate_hz = t.rate_hz;
  fut.points.assign(local.points.begin() + static_cast<std::ptrdiff_t>(kPastLength), local.points.end());
  s.futures.push_back(std::move(fut));
  s.meta.seed = id;
  s.meta.source = SampleSource::kReal;
  s.meta.branch_index = {-1};
  if (record.map) {
    s.map = *record.map;
    s.map.origin = Pose{};
  }
  s.validate();
  return s;
}

}  // namespace synthtraj
