#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthtraj/chain.hpp"
#include "synthtraj/samples.hpp"

namespace synthtraj {

inline constexpr std::uint16_t kDatasetVersion = 1;
inline constexpr std::uint16_t kChainFileVersion = 1;

/// Archive header. `config` is an opaque snapshot of the generator settings.
struct DatasetManifest {
  std::uint16_t version = kDatasetVersion;
  std::uint64_t count = 0;
  std::vector<std::uint64_t> seeds;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::uint32_t> record_crcs;
  std::uint32_t payload_crc = 0;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<MultimodalSample> samples;
};

/// Serializes samples into a "TJDS" archive. Identical input gives identical bytes.
std::vector<std::uint8_t> encode_dataset(std::span<const MultimodalSample> samples,
                                         const nlohmann::json& config = nlohmann::json::object());
/// Parses and verifies an archive; any checksum mismatch is a DataError.
Dataset decode_dataset(std::span<const std::uint8_t> bytes);

DatasetManifest write_dataset(const std::filesystem::path& path, std::span<const MultimodalSample> samples,
                              const nlohmann::json& config = nlohmann::json::object());
Dataset read_dataset(const std::filesystem::path& path);

/// One record, also the payload of a dataset entry.
std::vector<std::uint8_t> encode_sample(const MultimodalSample& s);
MultimodalSample decode_sample(std::span<const std::uint8_t> bytes);

/// "TJMC" chain file: clusters (with members), states, rows, initial distribution.
std::vector<std::uint8_t> encode_chain(const MarkovChain& chain);
MarkovChain decode_chain(std::span<const std::uint8_t> bytes);
void save_chain(const std::filesystem::path& path, const MarkovChain& chain);
MarkovChain load_chain(const std::filesystem::path& path);

/// A trajectory read from an external split, with its top-view map if any.
struct RealRecord {
  std::string name;
  Trajectory trajectory;
  std::optional<SemanticMap> map;
};

struct Rejection {
  std::string file;
  std::string reason;
};

struct IngestResult {
  std::vector<RealRecord> records;
  std::vector<Rejection> rejected;
};

/// Loads a split directory into trajectories. Implementations decide the layout.
class SplitAdapter {
 public:
  virtual ~SplitAdapter() = default;
  virtual IngestResult load(const std::filesystem::path& dir) const = 0;
};

/// Default layout: one text file per sample (*.txt or *.csv) with rows
/// "index x y" (comma or whitespace separated, '#' starts a comment), indices
/// consecutive at 10 Hz, coordinates in meters. An optional class-id PGM with
/// the same stem is the heading-up map at 0.5 m/px centered on the present.
class TextSplitAdapter : public SplitAdapter {
 public:
  IngestResult load(const std::filesystem::path& dir) const override;
};

/// Formats a trajectory as "index x y" rows with round-trip precision.
std::string format_trajectory_text(const Trajectory& t);

/// Parses one text trajectory; returns the rejection reason on failure.
std::optional<std::string> parse_trajectory_text(const std::string& text, Trajectory& out);

/// Files are visited in filename order.
IngestResult ingest_real(const std::filesystem::path& split_dir, const SplitAdapter& adapter = TextSplitAdapter{});

/// Turns a real trajectory (>= 60 points) into a sample: the first 20 points
/// are the past, the next 40 the single ground-truth future, in the heading-up
/// frame of point 19. The map, if any, is taken as already heading-up.
MultimodalSample real_to_sample(const RealRecord& record, std::uint64_t id = 0);

}  // namespace synthtraj
