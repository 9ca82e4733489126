#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthtraj/geometry.hpp"

namespace synthtraj {

/// Horizons in steps at 10 Hz: 1, 2, 3 and 4 seconds.
inline constexpr std::array<std::size_t, 4> kHorizonSteps{10, 20, 30, 40};

/// Mean L2 over future steps 1..horizon_steps (indices 0..horizon_steps-1).
double ade(const Trajectory& pred, const Trajectory& gt, std::size_t horizon_steps);
/// L2 at future step horizon_steps (index horizon_steps-1).
double fde(const Trajectory& pred, const Trajectory& gt, std::size_t horizon_steps);

enum class EvalMode { kTop1, kBestOfK };
std::string to_string(EvalMode m);

struct HorizonMetrics {
  std::size_t steps = 0;
  double ade = 0.0;
  double fde = 0.0;
};

struct ModeMetrics {
  EvalMode mode = EvalMode::kTop1;
  std::vector<HorizonMetrics> horizons;
};

/// Per-sample errors at the longest horizon.
struct SampleResult {
  std::size_t id = 0;
  std::size_t k = 0;
  double top1_ade = 0.0;
  double top1_fde = 0.0;
  double best_ade = 0.0;
  double best_fde = 0.0;
};

struct SampleError {
  std::size_t id = 0;
  std::string message;
};

struct EvalReport {
  std::size_t count = 0;  // evaluated samples (excluding errors)
  ModeMetrics top1{EvalMode::kTop1, {}};
  ModeMetrics best_of_k{EvalMode::kBestOfK, {}};
  std::vector<SampleResult> worst;  // up to 20, by top-1 FDE at the longest horizon
  std::vector<SampleError> errors;

  const ModeMetrics& metrics(EvalMode m) const { return m == EvalMode::kTop1 ? top1 : best_of_k; }
};

/// K predictions for one sample, plus its id in the dataset.
struct PredictionRecord {
  std::size_t id = 0;
  std::vector<Trajectory> predictions;
};

/// Scores predictions against ground truths. gts[i] is the reference future
/// for preds[i] (the first ground-truth future of the sample). Best-of-K is
/// selected independently per metric and horizon. Malformed samples become
/// error entries and are left out of the aggregates.
EvalReport evaluate(std::span<const PredictionRecord> preds, std::span<const Trajectory> gts,
                    std::span<const std::size_t> horizons = kHorizonSteps);

void write_table(std::ostream& os, const EvalReport& report, const std::string& title = {});
nlohmann::json to_json(const EvalReport& report);

/// Prediction files: JSON, one record per sample id with K trajectories in
/// meters in the heading-up frame.
nlohmann::json predictions_to_json(std::span<const PredictionRecord> records);
std::vector<PredictionRecord> predictions_from_json(const nlohmann::json& doc);
void write_predictions(const std::filesystem::path& path, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

}  // namespace synthtraj
