#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "synthtraj/geometry.hpp"
#include "synthtraj/rng.hpp"

namespace synthtraj {

using ClusterId = std::uint16_t;

/// K-means quantization of polar offsets.
///
/// Distances are Euclidean in (rho, theta_scale * theta). Members keep the
/// training offsets of each cluster so sampling can emit real offsets rather
/// than centroids; a model loaded without members falls back to centroids.
struct ClusterModel {
  std::vector<PolarOffset> centroids;
  std::vector<std::vector<PolarOffset>> members;
  double theta_scale = 1.0;

  std::size_t size() const { return centroids.size(); }
  ClusterId nearest(const PolarOffset& o) const;
  double distance_sq(const PolarOffset& a, const PolarOffset& b) const;
};

struct KMeansOptions {
  double theta_scale = 1.0;
  int max_iterations = 200;
};

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are re-seeded with
/// the point farthest from its centroid. Input order does not matter: the
/// offsets are sorted before seeding.
ClusterModel fit_clusters(std::span<const PolarOffset> offsets, std::size_t c, std::uint64_t seed,
                          const KMeansOptions& options = {});

/// N temporally adjacent cluster ids, oldest first.
struct ChainState {
  std::vector<ClusterId> gram;

  ClusterId newest() const { return gram.back(); }
  friend auto operator<=>(const ChainState&, const ChainState&) = default;
  friend bool operator==(const ChainState&, const ChainState&) = default;
};

struct Transition {
  std::uint32_t target = 0;
  double probability = 0.0;
};

enum class InitialMode { kFrequency, kUniform };

/// N-gram Markov chain over quantized offsets. Immutable once built.
///
/// States are indexed in lexicographic order of their grams. A state seen
/// only at the end of a trajectory has an empty row (a dead end); samplers
/// restart from the initial distribution when they reach one.
class MarkovChain {
 public:
  MarkovChain() = default;

  /// Counts transitions within each id sequence (never across sequences) and
  /// normalizes rows. The initial distribution is the empirical frequency of
  /// states as transition sources, or uniform over those states.
  static MarkovChain from_sequences(ClusterModel clusters, std::span<const std::vector<ClusterId>> sequences,
                                    int order, InitialMode initial = InitialMode::kFrequency);

  /// Reassembles a chain from serialized parts; validates every invariant.
  static MarkovChain from_parts(ClusterModel clusters, int order, std::vector<ChainState> states,
                                std::vector<std::vector<Transition>> rows, std::vector<double> initial);

  const ClusterModel& clusters() const { return clusters_; }
  int order() const { return order_; }
  std::size_t state_count() const { return states_.size(); }
  const ChainState& state(std::size_t i) const { return states_[i]; }
  std::span<const ChainState> states() const { return states_; }
  std::optional<std::size_t> find_state(const ChainState& s) const;
  std::span<const Transition> transitions(std::size_t state) const { return rows_[state]; }
  std::span<const double> initial_distribution() const { return initial_; }
  /// Probability of moving from `from` to `to` (0 when no such transition).
  double probability(std::size_t from, std::size_t to) const;

 private:
  void validate() const;

  ClusterModel clusters_;
  int order_ = 1;
  std::vector<ChainState> states_;
  std::map<ChainState, std::uint32_t> index_;
  std::vector<std::vector<Transition>> rows_;
  std::vector<double> initial_;
};

struct EstimateOptions {
  std::size_t clusters = 40;
  int order = 2;
  NoiseFilter filter;
  KMeansOptions kmeans;
  InitialMode initial = InitialMode::kFrequency;
  std::uint64_t seed = 0;
};

/// Estimates a chain from real trajectories: offsets, noise filter, k-means,
/// per-trajectory sliding N-grams, row normalization.
MarkovChain estimate(std::span<const Trajectory> trajectories, const EstimateOptions& options);

/// Result of walking the chain. points[k] is reached in state states[k];
/// states[0] is the initial state, which emits no offset.
struct ChainWalk {
  Trajectory trajectory;
  std::vector<PolarOffset> offsets;
  std::vector<std::uint32_t> states;
  std::size_t restarts = 0;
};

/// Optional early stop, checked after every emitted point.
using WalkStop = std::function<bool(Vec2)>;

/// Walks up to `steps` transitions from a state drawn from the initial distribution.
ChainWalk sample_walk(const MarkovChain& chain, std::size_t steps, const Pose& start, Rng& rng,
                      const WalkStop& stop = {});

/// Continues a walk from a known state. When `avoid_target` names a transition
/// and the row offers others, the first transition avoids it.
ChainWalk continue_walk(const MarkovChain& chain, std::uint32_t state, std::size_t steps, const Pose& start,
                        Rng& rng, std::optional<std::uint32_t> avoid_target = std::nullopt,
                        const WalkStop& stop = {});

/// Convenience wrapper returning only the sampled trajectory (steps + 1 points).
Trajectory sample_trajectory(const MarkovChain& chain, std::size_t steps, const Pose& start, std::uint64_t seed);

}  // namespace synthtraj
