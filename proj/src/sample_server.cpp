#include "synthtraj/sample_server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <exception>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "synthtraj/binary_io.hpp"
#include "synthtraj/errors.hpp"

namespace synthtraj {

namespace {

constexpr char kMagic[] = "TJF1";

bool is_request_level(WireError e) { return e != WireError::kGenerationFailed; }

}  // namespace

std::uint64_t config_hash(const MapGenConfig& m, const SampleConfig& s) {
  ByteWriter w;
  w.f64(m.lane_width);
  w.f64(m.sidewalk_width);
  w.i32(m.branching_factor_max);
  w.f64(m.double_width_prob);
  w.u8(m.unreachable_roads);
  w.u8(m.lidar_noise);
  w.f64(m.lidar_intensity);
  w.u8(m.sidewalk_jitter);
  w.i32(m.canvas);
  w.f64(m.resolution);
  w.i32(s.n_gt_min);
  w.i32(s.n_gt_max);
  w.u8(s.shift_enabled);
  w.f64(s.shift_lo);
  w.f64(s.shift_mode);
  w.f64(s.shift_hi);
  w.i32(s.crop_size);
  const auto& d = w.data();
  const std::uint64_t h = hash_name(std::string_view(reinterpret_cast<const char*>(d.data()), d.size()));
  return h == 0 ? 1 : h;  // 0 means "any" on the wire
}

std::vector<std::uint8_t> StreamRequest::encode() const {
  ByteWriter w;
  w.text(std::string_view(kMagic, 4));
  w.u16(version);
  w.u16(flags);
  w.u32(batch);
  w.u64(config_hash);
  w.u64(base_seed);
  w.u64(request_index);
  w.f32(mix_ratio);
  return w.take();
}

StreamRequest StreamRequest::decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kRequestSize) throw DataError("request must be 40 bytes");
  ByteReader r(bytes);
  if (r.text(4) != std::string(kMagic, 4)) throw DataError("bad magic");
  StreamRequest q;
  q.version = r.u16();
  q.flags = r.u16();
  q.batch = r.u32();
  q.config_hash = r.u64();
  q.base_seed = r.u64();
  q.request_index = r.u64();
  q.mix_ratio = r.f32();
  return q;
}

std::uint64_t record_seed(std::uint64_t base_seed, std::uint64_t request_index, std::uint32_t i) {
  return derive_seed(derive_seed(base_seed, request_index), i);
}

bool record_is_synthetic(std::uint32_t i, double r) {
  return std::floor(static_cast<double>(i + 1) * r) > std::floor(static_cast<double>(i) * r);
}

std::vector<std::uint8_t> encode_sample_record(const MultimodalSample& s) {
  ByteWriter w;
  w.u8(kRecordSample);
  w.u8(static_cast<std::uint8_t>(s.meta.source));
  w.u8(static_cast<std::uint8_t>(s.futures.size()));
  w.u8(0);
  w.u16(static_cast<std::uint16_t>(s.map.height));
  w.u16(static_cast<std::uint16_t>(s.map.width));
  w.u16(static_cast<std::uint16_t>(s.past.size()));
  w.u16(static_cast<std::uint16_t>(s.futures.empty() ? 0 : s.futures.front().size()));
  w.u64(s.meta.seed);
  w.bytes(s.map.labels);
  for (const auto& p : s.past.points) {
    w.f32(static_cast<float>(p.x));
    w.f32(static_cast<float>(p.y));
  }
  for (const auto& f : s.futures) {
    for (const auto& p : f.points) {
      w.f32(static_cast<float>(p.x));
      w.f32(static_cast<float>(p.y));
    }
  }
  return w.take();
}

std::vector<std::uint8_t> encode_error_record(WireError code, const std::string& message) {
  ByteWriter w;
  w.u8(kRecordError);
  w.u16(static_cast<std::uint16_t>(code));
  w.u32(static_cast<std::uint32_t>(message.size()));
  w.text(message);
  return w.take();
}

WireRecord decode_record(std::span<const std::uint8_t> record) {
  ByteReader r(record);
  WireRecord out;
  out.raw.assign(record.begin(), record.end());
  out.kind = r.u8();
  if (out.kind == kRecordError) {
    out.error = static_cast<WireError>(r.u16());
    out.message = r.text(r.u32());
    return out;
  }
  if (out.kind != kRecordSample) throw DataError("unknown record kind " + std::to_string(out.kind));
  const std::uint8_t source = r.u8();
  if (source > 1) throw DataError("unknown sample source");
  out.source = static_cast<SampleSource>(source);
  const std::uint8_t n_gt = r.u8();
  r.u8();
  out.height = r.u16();
  out.width = r.u16();
  const std::uint16_t past_len = r.u16();
  const std::uint16_t future_len = r.u16();
  out.seed = r.u64();
  auto map = r.bytes(static_cast<std::size_t>(out.height) * static_cast<std::size_t>(out.width));
  out.map.assign(map.begin(), map.end());
  auto read_points = [&](std::size_t n) {
    std::vector<Vec2> pts(n);
    for (auto& p : pts) {
      p.x = r.f32();
      p.y = r.f32();
    }
    return pts;
  };
  out.past = read_points(past_len);
  for (std::uint8_t k = 0; k < n_gt; ++k) out.futures.push_back(read_points(future_len));
  if (r.remaining() != 0) throw DataError("trailing bytes in record");
  return out;
}

SampleServer::SampleServer(const MarkovChain& chain, MapGenConfig map_cfg, SampleConfig sample_cfg,
                           std::vector<MultimodalSample> real)
    : chain_(chain),
      map_cfg_(map_cfg),
      sample_cfg_(sample_cfg),
      real_(std::move(real)),
      hash_(config_hash(map_cfg, sample_cfg)) {
  map_cfg_.validate();
  sample_cfg_.validate();
}

SampleServer::~SampleServer() { stop(); }

std::vector<std::uint8_t> SampleServer::record_for(const StreamRequest& req, std::uint32_t i) const {
  const std::uint64_t seed = record_seed(req.base_seed, req.request_index, i);
  const bool synthetic = real_.empty() || record_is_synthetic(i, req.mix_ratio);
  try {
    if (!synthetic) {
      MultimodalSample s = real_[seed % real_.size()];
      s.meta.seed = seed;
      return encode_sample_record(s);
    }
    return encode_sample_record(generate_sample(chain_, map_cfg_, sample_cfg_, seed));
  } catch (const std::exception& e) {
    spdlog::warn("record {} (seed {}) failed: {}", i, seed, e.what());
    return encode_error_record(WireError::kGenerationFailed, e.what());
  }
}

std::vector<std::uint8_t> SampleServer::respond(const StreamRequest& req) const {
  ByteWriter w;
  auto frame = [&](const std::vector<std::uint8_t>& rec) {
    w.u32(static_cast<std::uint32_t>(rec.size()));
    w.bytes(rec);
  };
  if (req.version != kProtocolVersion) {
    frame(encode_error_record(WireError::kVersionMismatch, "server speaks protocol version " +
                                                               std::to_string(kProtocolVersion)));
    return w.take();
  }
  if (req.batch == 0 || req.batch > kMaxBatch || !(req.mix_ratio >= 0.0f && req.mix_ratio <= 1.0f)) {
    frame(encode_error_record(WireError::kMalformedRequest, "batch must be in [1, " + std::to_string(kMaxBatch) + "] and mix ratio in [0, 1]"));
    return w.take();
  }
  if (req.config_hash != 0 && req.config_hash != hash_) {
    frame(encode_error_record(WireError::kConfigMismatch, "generator config hash differs"));
    return w.take();
  }
  std::vector<std::vector<std::uint8_t>> records(req.batch);
  std::atomic<std::uint32_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    try {
      for (std::uint32_t i = next++; i < req.batch; i = next++) records[i] = record_for(req, i);
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < std::min<unsigned>(jobs_, req.batch); ++j) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  for (const auto& rec : records) frame(rec);
  return w.take();
}

namespace {

bool send_all(int fd, std::span<const std::uint8_t> data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

// Returns bytes read; less than n only on EOF or error.
std::size_t recv_all(int fd, std::uint8_t* out, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t k = ::recv(fd, out + got, n - got, 0);
    if (k < 0 && errno == EINTR) continue;
    if (k <= 0) break;
    got += static_cast<std::size_t>(k);
  }
  return got;
}

[[noreturn]] void sys_fail(const std::string& what) { throw std::runtime_error(what + ": " + std::strerror(errno)); }

}  // namespace

void SampleServer::bind(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port_s = std::to_string(port);
  if (int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), port_s.c_str(), &hints, &res); rc != 0) {
    throw std::runtime_error("cannot resolve " + host + ": " + gai_strerror(rc));
  }
  listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (listen_fd_ < 0) {
    ::freeaddrinfo(res);
    sys_fail("socket");
  }
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, res->ai_addr, res->ai_addrlen) != 0) {
    ::freeaddrinfo(res);
    sys_fail("bind " + host + ":" + port_s);
  }
  ::freeaddrinfo(res);
  if (::listen(listen_fd_, 64) != 0) sys_fail("listen");
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  spdlog::info("listening on {}:{} (config hash {:016x})", host, port_, hash_);
}

void SampleServer::start() {
  if (listen_fd_ < 0) throw PreconditionError("bind() before start()");
  running_ = true;
  accept_thread_ = std::thread([this] { serve(); });
}

void SampleServer::serve() {
  if (listen_fd_ < 0) throw PreconditionError("bind() before serve()");
  running_ = true;
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, 100);
    if (rc <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(mu_);
    clients_.insert(fd);
    workers_.emplace_back([this, fd] { handle(fd); });
  }
}

void SampleServer::handle(int fd) {
  std::array<std::uint8_t, kRequestSize> buf{};
  while (running_) {
    if (recv_all(fd, buf.data(), buf.size()) != buf.size()) break;
    std::vector<std::uint8_t> reply;
    bool close_after = false;
    try {
      const StreamRequest req = StreamRequest::decode(buf);
      reply = respond(req);
      close_after = req.version != kProtocolVersion;
    } catch (const DataError& e) {
      ByteWriter w;
      const auto rec = encode_error_record(WireError::kBadMagic, e.what());
      w.u32(static_cast<std::uint32_t>(rec.size()));
      w.bytes(rec);
      reply = w.take();
      close_after = true;
    }
    if (!send_all(fd, reply) || close_after) break;
  }
  std::lock_guard lock(mu_);
  if (clients_.erase(fd) != 0) ::close(fd);
}

void SampleServer::stop() {
  running_ = false;
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    for (int fd : clients_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
}

std::pair<std::string, std::uint16_t> parse_bind_address(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw PreconditionError("bind address must be host:port");
  const std::string port_s = addr.substr(colon + 1);
  if (port_s.empty() || port_s.size() > 5 ||
      port_s.find_first_not_of("0123456789") != std::string::npos || std::stoul(port_s) > 65535) {
    throw PreconditionError("invalid port '" + port_s + "'");
  }
  return {addr.substr(0, colon), static_cast<std::uint16_t>(std::stoul(port_s))};
}

SampleClient::SampleClient(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0) {
    throw std::runtime_error("cannot resolve " + host + ": " + gai_strerror(rc));
  }
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd_ < 0 || ::connect(fd_, res->ai_addr, res->ai_addrlen) != 0) {
    ::freeaddrinfo(res);
    sys_fail("connect");
  }
  ::freeaddrinfo(res);
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

SampleClient::~SampleClient() {
  if (fd_ >= 0) ::close(fd_);
}

void SampleClient::send_raw(std::span<const std::uint8_t> bytes) {
  if (!send_all(fd_, bytes)) sys_fail("send");
}

std::optional<WireRecord> SampleClient::read_frame() {
  std::array<std::uint8_t, 4> len_buf{};
  const std::size_t got = recv_all(fd_, len_buf.data(), 4);
  if (got == 0) return std::nullopt;
  if (got != 4) throw DataError("truncated frame header");
  const std::uint32_t len = ByteReader(len_buf).u32();
  std::vector<std::uint8_t> rec(len);
  if (recv_all(fd_, rec.data(), len) != len) throw DataError("truncated frame");
  return decode_record(rec);
}

std::vector<WireRecord> SampleClient::request(const StreamRequest& req) {
  send_raw(req.encode());
  std::vector<WireRecord> out;
  while (out.size() < req.batch) {
    auto rec = read_frame();
    if (!rec) throw DataError("server closed the connection");
    const bool stop = rec->is_error() && is_request_level(rec->error);
    out.push_back(std::move(*rec));
    if (stop) break;
  }
  return out;
}

}  // namespace synthtraj
