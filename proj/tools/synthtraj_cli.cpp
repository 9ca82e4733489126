// synthtraj command line: chain estimation, dataset generation, rendering,
// streaming server, evaluation and match-vector export.

#include <atomic>
#include <csignal>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "synthtraj/baselines.hpp"
#include "synthtraj/dataset_io.hpp"
#include "synthtraj/demo_logs.hpp"
#include "synthtraj/errors.hpp"
#include "synthtraj/eval.hpp"
#include "synthtraj/image_io.hpp"
#include "synthtraj/matching.hpp"
#include "synthtraj/sample_server.hpp"
#include "synthtraj/samples.hpp"

namespace fs = std::filesystem;
using namespace synthtraj;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kData = 3, kInternal = 4 };

struct ChainSource {
  std::string chain_path;
  std::string split_dir;
  std::size_t clusters = 40;
  int state_order = 2;
  std::string initial = "frequency";
  std::string theta_unit = "rad";
  double rho_min = 0.005;
  double theta_max = 0.5;
  double theta_scale = 1.0;
};

struct GenFlags {
  std::uint64_t seed = 0;
  bool no_lidar_noise = false;
  bool no_shift = false;
  bool no_unreachable = false;
  int branching_max = 5;
  int n_gt_max = 5;
  double lidar_intensity = 0.5;
};

void add_estimate_flags(CLI::App* app, ChainSource& c) {
  app->add_option("--clusters", c.clusters, "Number of k-means clusters")->check(CLI::Range(1, 4096));
  app->add_option("--state-order", c.state_order, "Cluster ids per chain state (1 to 4)")->check(CLI::Range(1, 4));
  app->add_option("--initial", c.initial, "Initial distribution")->check(CLI::IsMember({"frequency", "uniform"}));
  app->add_option("--theta-unit", c.theta_unit, "Unit of --theta-max")->check(CLI::IsMember({"rad", "deg"}));
  app->add_option("--rho-min", c.rho_min, "Noise filter: minimum step length (m)");
  app->add_option("--theta-max", c.theta_max, "Noise filter: maximum heading change");
  app->add_option("--theta-scale", c.theta_scale, "Weight of theta in the k-means distance");
}

void add_chain_source(CLI::App* app, ChainSource& c) {
  auto* chain = app->add_option("--chain", c.chain_path, "Chain file from estimate-chain")->check(CLI::ExistingFile);
  auto* split = app->add_option("--split", c.split_dir, "Estimate the chain from this split instead")
                    ->check(CLI::ExistingDirectory);
  chain->excludes(split);
  add_estimate_flags(app, c);
}

void add_gen_flags(CLI::App* app, GenFlags& g) {
  app->add_option("--seed", g.seed, "Base seed");
  app->add_flag("--no-lidar-noise", g.no_lidar_noise, "Disable simulated LiDAR dropout");
  app->add_flag("--no-shift", g.no_shift, "Disable lateral shift inside the lane");
  app->add_flag("--no-unreachable", g.no_unreachable, "Disable unreachable roads");
  app->add_option("--branching-max", g.branching_max, "Maximum roads per scene")->check(CLI::Range(1, 32));
  app->add_option("--n-gt-max", g.n_gt_max, "Maximum ground-truth futures")->check(CLI::Range(1, 5));
  app->add_option("--lidar-intensity", g.lidar_intensity, "Peak dropout probability")->check(CLI::Range(0.0, 1.0));
}

EstimateOptions estimate_options(const ChainSource& c, std::uint64_t seed) {
  EstimateOptions o;
  o.clusters = c.clusters;
  o.order = c.state_order;
  o.initial = c.initial == "uniform" ? InitialMode::kUniform : InitialMode::kFrequency;
  o.filter.rho_min = c.rho_min;
  o.filter.theta_max = c.theta_max;
  o.filter.theta_unit = c.theta_unit == "deg" ? AngleUnit::kDegrees : AngleUnit::kRadians;
  o.kmeans.theta_scale = c.theta_scale;
  o.seed = seed;
  return o;
}

MarkovChain estimate_from_split(const ChainSource& c, std::uint64_t seed) {
  const IngestResult in = ingest_real(c.split_dir);
  if (in.records.empty()) throw DataError("no usable trajectories in " + c.split_dir);
  std::vector<Trajectory> trajs;
  for (const auto& r : in.records) trajs.push_back(r.trajectory);
  return estimate(trajs, estimate_options(c, seed));
}

MarkovChain load_chain_source(const ChainSource& c, std::uint64_t seed) {
  if (!c.chain_path.empty()) return load_chain(c.chain_path);
  if (!c.split_dir.empty()) return estimate_from_split(c, seed);
  throw PreconditionError("either --chain or --split is required");
}

std::pair<MapGenConfig, SampleConfig> configs(const GenFlags& g) {
  MapGenConfig m;
  m.lidar_noise = !g.no_lidar_noise;
  m.unreachable_roads = !g.no_unreachable;
  m.branching_factor_max = g.branching_max;
  m.lidar_intensity = g.lidar_intensity;
  SampleConfig s;
  s.shift_enabled = !g.no_shift;
  s.n_gt_max = g.n_gt_max;
  m.validate();
  s.validate();
  return {m, s};
}

nlohmann::json config_json(const MarkovChain& chain, const MapGenConfig& m, const SampleConfig& s,
                           std::uint64_t seed) {
  return {{"seed", seed},
          {"chain", {{"clusters", chain.clusters().size()}, {"order", chain.order()}, {"states", chain.state_count()}}},
          {"map",
           {{"lane_width", m.lane_width},
            {"sidewalk_width", m.sidewalk_width},
            {"branching_factor_max", m.branching_factor_max},
            {"double_width_prob", m.double_width_prob},
            {"unreachable_roads", m.unreachable_roads},
            {"lidar_noise", m.lidar_noise},
            {"lidar_intensity", m.lidar_intensity},
            {"sidewalk_jitter", m.sidewalk_jitter},
            {"canvas", m.canvas},
            {"resolution", m.resolution}}},
          {"sample",
           {{"n_gt_min", s.n_gt_min},
            {"n_gt_max", s.n_gt_max},
            {"shift_enabled", s.shift_enabled},
            {"shift", {s.shift_lo, s.shift_mode, s.shift_hi}},
            {"crop_size", s.crop_size}}},
          {"config_hash", config_hash(m, s)}};
}

std::vector<MultimodalSample> generate_parallel(const MarkovChain& chain, const MapGenConfig& m,
                                                const SampleConfig& s, std::uint64_t seed, std::size_t count,
                                                unsigned jobs) {
  std::vector<MultimodalSample> out(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i] = generate_sample(chain, m, s, derive_seed(seed, i));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < std::max(1u, jobs); ++j) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<MultimodalSample> real_samples(const std::string& split_dir) {
  const IngestResult in = ingest_real(split_dir);
  std::vector<MultimodalSample> out;
  std::size_t short_logs = 0;
  for (std::size_t i = 0; i < in.records.size(); ++i) {
    if (in.records[i].trajectory.size() < kPastLength + kFutureLength) {
      ++short_logs;
      continue;
    }
    out.push_back(real_to_sample(in.records[i], i));
  }
  if (short_logs > 0) spdlog::warn("{} trajectories shorter than 60 points skipped", short_logs);
  return out;
}

std::atomic<SampleServer*> g_server{nullptr};

extern "C" void on_signal(int) {
  if (auto* s = g_server.load()) s->request_stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic multimodal trajectory generation and evaluation"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  // estimate-chain
  ChainSource est_src;
  std::string est_out;
  std::uint64_t est_seed = 0;
  auto* est = app.add_subcommand("estimate-chain", "Estimate a Markov chain from a trajectory split");
  est->add_option("--split", est_src.split_dir, "Split directory")->required()->check(CLI::ExistingDirectory);
  est->add_option("--out", est_out, "Output chain file")->required();
  est->add_option("--seed", est_seed, "k-means seed");
  add_estimate_flags(est, est_src);

  // gen-dataset
  ChainSource gen_src;
  GenFlags gen_flags;
  std::size_t gen_count = 100;
  unsigned gen_jobs = 1;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-dataset", "Generate a sample archive");
  add_chain_source(gen, gen_src);
  add_gen_flags(gen, gen_flags);
  gen->add_option("--count", gen_count, "Number of samples")->check(CLI::PositiveNumber);
  gen->add_option("--jobs", gen_jobs, "Worker threads")->check(CLI::Range(1u, 256u));
  gen->add_option("--out", gen_out, "Output archive")->required();

  // render
  ChainSource ren_src;
  GenFlags ren_flags;
  std::string ren_dataset, ren_preds, ren_out;
  std::size_t ren_index = 0;
  int ren_scale = 2;
  auto* ren = app.add_subcommand("render", "Write false-color images of a sample");
  add_chain_source(ren, ren_src);
  add_gen_flags(ren, ren_flags);
  ren->add_option("--dataset", ren_dataset, "Render from an archive instead of generating")
      ->check(CLI::ExistingFile);
  ren->add_option("--index", ren_index, "Sample index in the archive");
  ren->add_option("--predictions", ren_preds, "Prediction file to overlay")->check(CLI::ExistingFile);
  ren->add_option("--scale", ren_scale, "Pixel scale factor")->check(CLI::Range(1, 8));
  ren->add_option("--out", ren_out, "Output path prefix (writes .ppm and .pgm)")->required();

  // serve
  ChainSource srv_src;
  GenFlags srv_flags;
  std::string srv_bind = "127.0.0.1:7878", srv_real;
  unsigned srv_jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* srv = app.add_subcommand("serve", "Stream generated samples over TCP");
  add_chain_source(srv, srv_src);
  add_gen_flags(srv, srv_flags);
  srv->add_option("--bind", srv_bind, "host:port");
  srv->add_option("--jobs", srv_jobs, "Threads generating each batch")->check(CLI::Range(1u, 256u));
  srv->add_option("--real-split", srv_real, "Real split mixed into batches")->check(CLI::ExistingDirectory);

  // eval
  std::string ev_dataset, ev_split, ev_preds, ev_baseline, ev_json, ev_out_preds;
  Predictor ev_pred;
  auto* ev = app.add_subcommand("eval", "Score predictions or a baseline (ADE/FDE)");
  auto* ev_ds_opt = ev->add_option("--dataset", ev_dataset, "Sample archive")->check(CLI::ExistingFile);
  auto* ev_split_opt =
      ev->add_option("--split", ev_split, "Real split directory (60-point windows)")->check(CLI::ExistingDirectory);
  ev_ds_opt->excludes(ev_split_opt);
  auto* ev_p = ev->add_option("--predictions", ev_preds, "Prediction file")->check(CLI::ExistingFile);
  auto* ev_b = ev->add_option("--baseline", ev_baseline, "Baseline predictor")
                   ->check(CLI::IsMember({"constant_velocity", "linear", "kalman"}));
  ev_p->excludes(ev_b);
  ev->add_option("--sigma-a", ev_pred.sigma_a, "Kalman process noise (m/s^2)")->check(CLI::PositiveNumber);
  ev->add_option("--sigma-z", ev_pred.sigma_z, "Kalman measurement noise (m)")->check(CLI::PositiveNumber);
  ev->add_option("--json", ev_json, "Write the machine-readable report here");
  ev->add_option("--write-predictions", ev_out_preds, "Save baseline predictions as a prediction file");

  // export-match-vectors
  std::uint64_t mv_seed = 0;
  std::size_t mv_count = 1000;
  std::string mv_out;
  auto* mv = app.add_subcommand("export-match-vectors", "Write matching/loss test vectors");
  mv->add_option("--seed", mv_seed, "Seed");
  mv->add_option("--count", mv_count, "Number of cases")->check(CLI::PositiveNumber);
  mv->add_option("--out", mv_out, "Output JSON file")->required();

  // demo-split
  std::uint64_t demo_seed = 0;
  std::size_t demo_count = 200;
  std::string demo_out;
  auto* demo = app.add_subcommand("demo-split", "Write a split of kinematic demo logs");
  demo->add_option("--seed", demo_seed, "Seed");
  demo->add_option("--count", demo_count, "Number of logs")->check(CLI::PositiveNumber);
  demo->add_option("--out", demo_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  spdlog::set_default_logger(spdlog::stderr_color_mt("synthtraj"));
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*est) {
      const MarkovChain chain = estimate_from_split(est_src, est_seed);
      save_chain(est_out, chain);
      std::cout << "chain: " << chain.clusters().size() << " clusters, order " << chain.order() << ", "
                << chain.state_count() << " states -> " << est_out << "\n";
    } else if (*gen) {
      const MarkovChain chain = load_chain_source(gen_src, gen_flags.seed);
      const auto [m, s] = configs(gen_flags);
      const auto samples = generate_parallel(chain, m, s, gen_flags.seed, gen_count, gen_jobs);
      const auto manifest = write_dataset(gen_out, samples, config_json(chain, m, s, gen_flags.seed));
      std::cout << manifest.count << " samples -> " << gen_out << " (payload crc32 " << std::hex
                << manifest.payload_crc << std::dec << ")\n";
    } else if (*ren) {
      MultimodalSample sample;
      if (!ren_dataset.empty()) {
        Dataset ds = read_dataset(ren_dataset);
        if (ren_index >= ds.samples.size()) throw PreconditionError("--index beyond the archive");
        sample = std::move(ds.samples[ren_index]);
      } else {
        const MarkovChain chain = load_chain_source(ren_src, ren_flags.seed);
        const auto [m, s] = configs(ren_flags);
        sample = generate_sample(chain, m, s, ren_flags.seed);
      }
      std::vector<Trajectory> overlay;
      if (!ren_preds.empty()) {
        for (auto& r : read_predictions(ren_preds)) {
          if (r.id == ren_index) overlay = std::move(r.predictions);
        }
      }
      if (sample.map.empty()) throw DataError("sample has no map to render");
      write_ppm(ren_out + ".ppm", render_sample(sample, overlay, ren_scale));
      write_pgm(ren_out + ".pgm", sample.map);
      std::cout << "wrote " << ren_out << ".ppm and " << ren_out << ".pgm\n";
    } else if (*srv) {
      const MarkovChain chain = load_chain_source(srv_src, srv_flags.seed);
      const auto [m, s] = configs(srv_flags);
      std::vector<MultimodalSample> real;
      if (!srv_real.empty()) real = real_samples(srv_real);
      const auto [host, port] = parse_bind_address(srv_bind);
      SampleServer server(chain, m, s, std::move(real));
      server.set_jobs(srv_jobs);
      server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "serving on " << host << ":" << server.port() << std::endl;
      server.serve();
      g_server = nullptr;
    } else if (*ev) {
      std::vector<MultimodalSample> samples;
      if (!ev_dataset.empty()) {
        samples = read_dataset(ev_dataset).samples;
      } else if (!ev_split.empty()) {
        samples = real_samples(ev_split);
      } else {
        throw PreconditionError("eval needs --dataset or --split");
      }
      std::vector<PredictionRecord> preds;
      std::string title;
      if (!ev_preds.empty()) {
        auto by_id = read_predictions(ev_preds);
        std::vector<std::optional<PredictionRecord>> slot(samples.size());
        for (auto& r : by_id) {
          if (r.id < slot.size()) slot[r.id] = std::move(r);
        }
        for (std::size_t i = 0; i < samples.size(); ++i) {
          preds.push_back(slot[i] ? std::move(*slot[i]) : PredictionRecord{i, {}});
        }
        title = "predictions: " + ev_preds;
      } else if (!ev_baseline.empty()) {
        ev_pred.kind = parse_predictor_kind(ev_baseline);
        for (std::size_t i = 0; i < samples.size(); ++i) {
          preds.push_back({i, {predict(ev_pred, samples[i].past, kFutureLength)}});
        }
        title = "baseline: " + ev_baseline;
        if (!ev_out_preds.empty()) write_predictions(ev_out_preds, preds);
      } else {
        throw PreconditionError("eval needs --predictions or --baseline");
      }
      std::vector<Trajectory> gts;
      for (const auto& s : samples) gts.push_back(s.futures.front());
      const EvalReport report = evaluate(preds, gts);
      write_table(std::cout, report, title);
      if (!ev_json.empty()) {
        std::ofstream os(ev_json);
        if (!os) throw DataError("cannot write " + ev_json);
        os << to_json(report).dump(2) << "\n";
      }
    } else if (*mv) {
      std::ofstream os(mv_out);
      if (!os) throw DataError("cannot write " + mv_out);
      os << match_vectors(mv_seed, mv_count).dump() << "\n";
      std::cout << mv_count << " match vectors -> " << mv_out << "\n";
    } else if (*demo) {
      write_demo_split(demo_out, demo_count, demo_seed);
      std::cout << demo_count << " demo logs -> " << demo_out << "\n";
    }
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}
