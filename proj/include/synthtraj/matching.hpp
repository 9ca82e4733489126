#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "synthtraj/geometry.hpp"

namespace synthtraj {

/// Pairwise trajectory distance used to rank prediction/ground-truth pairs.
enum class TrajDistance { kMeanL2, kSumL2, kFinalL2 };

std::string to_string(TrajDistance d);
TrajDistance parse_traj_distance(const std::string& name);

using IndexPair = std::pair<std::size_t, std::size_t>;  // (prediction, ground truth)

/// Greedy matching of K predictions to N_GT futures.
///
/// `pairs` holds min(K, N_GT) one-to-one matches in the order they were
/// picked; `leftover_pairs` attaches every unmatched prediction to its
/// closest future.
struct Assignment {
  std::vector<IndexPair> pairs;
  std::vector<IndexPair> leftover_pairs;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Dense row-major matrix, rows = predictions, cols = ground truths.
struct DistanceMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

double trajectory_distance(const Trajectory& a, const Trajectory& b, TrajDistance kind);

/// Mean over points of the squared Euclidean error.
double squared_error(const Trajectory& pred, const Trajectory& gt);

DistanceMatrix distance_matrix(std::span<const Trajectory> preds, std::span<const Trajectory> gts, TrajDistance kind);

/// Repeatedly takes the globally smallest remaining entry; ties go to the
/// lowest (prediction, ground truth) index pair.
Assignment greedy_assign(const DistanceMatrix& d);
Assignment greedy_assign(std::span<const Trajectory> preds, std::span<const Trajectory> gts,
                         TrajDistance kind = TrajDistance::kMeanL2);

/// Mean squared error averaged over pairs and leftover pairs.
double multimodality_loss(std::span<const Trajectory> preds, std::span<const Trajectory> gts,
                          TrajDistance kind = TrajDistance::kMeanL2);
/// Loss for a given assignment.
double multimodality_loss(std::span<const Trajectory> preds, std::span<const Trajectory> gts, const Assignment& a);
/// Gradient of the loss w.r.t. every prediction point, assignment held fixed.
std::vector<std::vector<Vec2>> multimodality_loss_gradient(std::span<const Trajectory> preds,
                                                           std::span<const Trajectory> gts, const Assignment& a);

/// Best-of-K: squared error of the closest prediction only.
double variety_loss(std::span<const Trajectory> preds, const Trajectory& gt);
/// Squared error averaged over every prediction.
double mse_loss(std::span<const Trajectory> preds, const Trajectory& gt);

/// Versioned test-vector document (random instances, assignments and loss
/// values) for cross-checking other implementations of these losses.
nlohmann::json match_vectors(std::uint64_t seed, std::size_t cases);

}  // namespace synthtraj
