#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "synthtraj/chain.hpp"
#include "synthtraj/mapgen.hpp"
#include "synthtraj/samples.hpp"

namespace synthtraj {

inline constexpr std::uint16_t kProtocolVersion = 1;
inline constexpr std::size_t kRequestSize = 40;
inline constexpr std::uint32_t kMaxBatch = 4096;
inline constexpr std::uint8_t kRecordSample = 0x01;
inline constexpr std::uint8_t kRecordError = 0xEE;

enum class WireError : std::uint16_t {
  kBadMagic = 1,
  kVersionMismatch = 2,
  kMalformedRequest = 3,
  kConfigMismatch = 4,
  kGenerationFailed = 5,
};

/// Hash of every generator setting that influences sample content.
std::uint64_t config_hash(const MapGenConfig& map_cfg, const SampleConfig& sample_cfg);

/// Client request: "TJF1", version, flags, batch size, config hash (0 = any),
/// base seed, request index, synthetic fraction.
struct StreamRequest {
  std::uint16_t version = kProtocolVersion;
  std::uint16_t flags = 0;
  std::uint32_t batch = 1;
  std::uint64_t config_hash = 0;
  std::uint64_t base_seed = 0;
  std::uint64_t request_index = 0;
  float mix_ratio = 0.5f;

  std::vector<std::uint8_t> encode() const;
  /// Parses the fixed-size request; throws DataError on bad magic or size.
  static StreamRequest decode(std::span<const std::uint8_t> bytes);
};

/// Seed of record `i` in the response to (base_seed, request_index).
std::uint64_t record_seed(std::uint64_t base_seed, std::uint64_t request_index, std::uint32_t i);

/// Whether record i of a batch is synthetic at synthetic fraction r:
/// floor((i + 1) r) > floor(i r). Spreads the two sources evenly through the batch.
bool record_is_synthetic(std::uint32_t i, double r);

/// Wire record of one sample (no length prefix). Coordinates as float32.
std::vector<std::uint8_t> encode_sample_record(const MultimodalSample& s);
std::vector<std::uint8_t> encode_error_record(WireError code, const std::string& message);

/// Decoded frame.
struct WireRecord {
  std::uint8_t kind = kRecordSample;
  SampleSource source = SampleSource::kSynthetic;
  std::uint64_t seed = 0;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> map;
  std::vector<Vec2> past;
  std::vector<std::vector<Vec2>> futures;
  WireError error = WireError::kGenerationFailed;
  std::string message;
  std::vector<std::uint8_t> raw;  // record bytes as received

  bool is_error() const { return kind == kRecordError; }
};

WireRecord decode_record(std::span<const std::uint8_t> record);

/// Generates samples for stream requests. The chain and the optional real
/// dataset are shared read-only between connections.
class SampleServer {
 public:
  SampleServer(const MarkovChain& chain, MapGenConfig map_cfg, SampleConfig sample_cfg,
               std::vector<MultimodalSample> real = {});
  ~SampleServer();

  SampleServer(const SampleServer&) = delete;
  SampleServer& operator=(const SampleServer&) = delete;

  /// Length-prefixed frames answering one request. Pure: the same request
  /// always yields the same bytes. A request-level problem yields one error frame.
  std::vector<std::uint8_t> respond(const StreamRequest& req) const;

  /// Binds and listens; port 0 picks a free port.
  void bind(const std::string& host, std::uint16_t port);
  std::uint16_t port() const { return port_; }
  /// Accept loop in a background thread.
  void start();
  /// Blocks in the accept loop until stop().
  void serve();
  void stop();
  /// Async-signal-safe: only asks serve() to return.
  void request_stop() { running_ = false; }

  std::uint64_t hash() const { return hash_; }
  /// Threads generating one batch; the reply bytes do not depend on it.
  void set_jobs(unsigned jobs) { jobs_ = std::max(1u, jobs); }

 private:
  void handle(int fd);
  std::vector<std::uint8_t> record_for(const StreamRequest& req, std::uint32_t i) const;

  const MarkovChain& chain_;
  MapGenConfig map_cfg_;
  SampleConfig sample_cfg_;
  std::vector<MultimodalSample> real_;
  std::uint64_t hash_ = 0;
  unsigned jobs_ = 1;

  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::mutex mu_;
  std::set<int> clients_;
  std::vector<std::thread> workers_;
};

/// Parses "host:port".
std::pair<std::string, std::uint16_t> parse_bind_address(const std::string& addr);

/// Blocking client for the stream protocol.
class SampleClient {
 public:
  SampleClient(const std::string& host, std::uint16_t port);
  ~SampleClient();

  SampleClient(const SampleClient&) = delete;
  SampleClient& operator=(const SampleClient&) = delete;

  /// Sends a request and reads its frames. Stops early after a request-level
  /// error frame.
  std::vector<WireRecord> request(const StreamRequest& req);
  /// Sends raw bytes (for protocol tests).
  void send_raw(std::span<const std::uint8_t> bytes);
  /// Reads one frame; nullopt on orderly close.
  std::optional<WireRecord> read_frame();

 private:
  int fd_ = -1;
};

}  // namespace synthtraj
