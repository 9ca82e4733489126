#include "synthtraj/chain.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <limits>
#include <string>

#include "synthtraj/errors.hpp"

namespace synthtraj {

double ClusterModel::distance_sq(const PolarOffset& a, const PolarOffset& b) const {
  const double dr = a.rho - b.rho;
  const double dt = theta_scale * (a.theta - b.theta);
  return dr * dr + dt * dt;
}

ClusterId ClusterModel::nearest(const PolarOffset& o) const {
  ClusterId best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    const double d = distance_sq(o, centroids[i]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<ClusterId>(i);
    }
  }
  return best;
}

namespace {

bool offset_less(const PolarOffset& a, const PolarOffset& b) {
  return a.rho < b.rho || (a.rho == b.rho && a.theta < b.theta);
}

}  // namespace

ClusterModel fit_clusters(std::span<const PolarOffset> input, std::size_t c, std::uint64_t seed,
                          const KMeansOptions& options) {
  if (c < 1) throw PreconditionError("fit_clusters: need at least one cluster");
  if (c > std::numeric_limits<ClusterId>::max()) throw PreconditionError("fit_clusters: too many clusters");
  if (input.size() < c) throw PreconditionError("fit_clusters: fewer offsets than clusters");

  std::vector<PolarOffset> pts(input.begin(), input.end());
  std::sort(pts.begin(), pts.end(), offset_less);
  {
    std::size_t count = pts.empty() ? 0 : 1;
    for (std::size_t i = 1; i < pts.size(); ++i) count += !(pts[i] == pts[i - 1]);
    if (c > count) {
      throw PreconditionError("fit_clusters: " + std::to_string(c) + " clusters requested but only " +
                              std::to_string(count) + " distinct offsets");
    }
  }

  ClusterModel model;
  model.theta_scale = options.theta_scale;
  const std::size_t n = pts.size();
  Rng rng(seed);

  // k-means++ seeding.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  model.centroids.push_back(pts[rng.below(n)]);
  while (model.centroids.size() < c) {
    const auto& last = model.centroids.back();
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], model.distance_sq(pts[i], last));
    model.centroids.push_back(pts[rng.weighted_index(d2)]);
  }

  std::vector<ClusterId> assign(n, 0);
  std::vector<std::size_t> counts(c);
  for (int iter = 0;; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const ClusterId a = model.nearest(pts[i]);
      changed |= (a != assign[i]);
      assign[i] = a;
    }
    if ((!changed && iter > 0) || iter >= options.max_iterations) break;

    std::vector<PolarOffset> sums(c);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[assign[i]].rho += pts[i].rho;
      sums[assign[i]].theta += pts[i].theta;
      ++counts[assign[i]];
    }
    for (std::size_t k = 0; k < c; ++k) {
      if (counts[k] > 0) {
        model.centroids[k] = {sums[k].rho / static_cast<double>(counts[k]),
                              sums[k].theta / static_cast<double>(counts[k])};
        continue;
      }
      // Empty cluster: move it onto the worst-served point.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = model.distance_sq(pts[i], model.centroids[assign[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      model.centroids[k] = pts[far];
      assign[far] = static_cast<ClusterId>(k);
    }
  }

  model.members.assign(c, {});
  for (std::size_t i = 0; i < n; ++i) model.members[assign[i]].push_back(pts[i]);
  return model;
}

MarkovChain MarkovChain::from_sequences(ClusterModel clusters, std::span<const std::vector<ClusterId>> sequences,
                                        int order, InitialMode initial) {
  if (order < 1) throw PreconditionError("chain order must be >= 1");
  const auto n = static_cast<std::size_t>(order);

  std::map<ChainState, std::map<ChainState, std::uint64_t>> counts;
  std::map<ChainState, bool> seen;
  for (const auto& seq : sequences) {
    if (seq.size() < n) continue;
    for (std::size_t i = 0; i + n <= seq.size(); ++i) {
      ChainState s{std::vector<ClusterId>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                          seq.begin() + static_cast<std::ptrdiff_t>(i + n))};
      seen.emplace(s, true);
      if (i + n < seq.size()) {
        ChainState next{std::vector<ClusterId>(seq.begin() + static_cast<std::ptrdiff_t>(i + 1),
                                               seq.begin() + static_cast<std::ptrdiff_t>(i + n + 1))};
        ++counts[s][next];
      }
    }
  }
  if (counts.empty()) throw DataError("no transitions observed; sequences shorter than order + 1");

  std::vector<ChainState> states;
  std::map<ChainState, std::uint32_t> index;
  for (const auto& [s, _] : seen) {
    index.emplace(s, static_cast<std::uint32_t>(states.size()));
    states.push_back(s);
  }

  std::vector<std::vector<Transition>> rows(states.size());
  std::vector<double> init(states.size(), 0.0);
  std::uint64_t total_transitions = 0;
  for (const auto& [src, targets] : counts) {
    std::uint64_t total = 0;
    for (const auto& [_, k] : targets) total += k;
    auto& row = rows[index.at(src)];
    for (const auto& [dst, k] : targets) {
      row.push_back({index.at(dst), static_cast<double>(k) / static_cast<double>(total)});
    }
    std::sort(row.begin(), row.end(), [](const Transition& a, const Transition& b) { return a.target < b.target; });
    init[index.at(src)] = static_cast<double>(total);
    total_transitions += total;
  }
  for (double& p : init) {
    if (initial == InitialMode::kUniform) {
      p = p > 0.0 ? 1.0 / static_cast<double>(counts.size()) : 0.0;
    } else {
      p /= static_cast<double>(total_transitions);
    }
  }
  return from_parts(std::move(clusters), order, std::move(states), std::move(rows), std::move(init));
}

MarkovChain MarkovChain::from_parts(ClusterModel clusters, int order, std::vector<ChainState> states,
                                    std::vector<std::vector<Transition>> rows, std::vector<double> initial) {
  MarkovChain chain;
  chain.clusters_ = std::move(clusters);
  chain.order_ = order;
  chain.states_ = std::move(states);
  chain.rows_ = std::move(rows);
  chain.initial_ = std::move(initial);
  for (std::size_t i = 0; i < chain.states_.size(); ++i) {
    if (!chain.index_.emplace(chain.states_[i], static_cast<std::uint32_t>(i)).second) {
      throw DataError("duplicate chain state");
    }
  }
  chain.validate();
  return chain;
}

void MarkovChain::validate() const {
  const std::size_t c = clusters_.size();
  if (c < 1) throw DataError("chain has no clusters");
  if (order_ < 1) throw DataError("chain order must be >= 1");
  if (!clusters_.members.empty() && clusters_.members.size() != c) throw DataError("member lists do not match clusters");
  if (rows_.size() != states_.size() || initial_.size() != states_.size()) throw DataError("chain table sizes differ");
  if (states_.empty()) throw DataError("chain has no states");
  const double bound = std::pow(static_cast<double>(c), order_);
  if (static_cast<double>(states_.size()) > bound) throw DataError("more states than C^N");

  for (const auto& s : states_) {
    if (s.gram.size() != static_cast<std::size_t>(order_)) throw DataError("state length differs from chain order");
    for (ClusterId id : s.gram) {
      if (id >= c) throw DataError("state references unknown cluster");
    }
  }
  double init_sum = 0.0;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    double sum = 0.0;
    for (const auto& t : rows_[i]) {
      if (t.target >= states_.size()) throw DataError("transition to unknown state");
      if (!(t.probability >= 0.0)) throw DataError("negative transition probability");
      sum += t.probability;
    }
    if (!rows_[i].empty() && std::abs(sum - 1.0) > 1e-9) throw DataError("transition row does not sum to 1");
    if (!(initial_[i] >= 0.0)) throw DataError("negative initial probability");
    if (rows_[i].empty() && initial_[i] > 0.0) throw DataError("initial distribution covers a dead-end state");
    init_sum += initial_[i];
  }
  if (std::abs(init_sum - 1.0) > 1e-9) throw DataError("initial distribution does not sum to 1");
}

std::optional<std::size_t> MarkovChain::find_state(const ChainState& s) const {
  auto it = index_.find(s);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double MarkovChain::probability(std::size_t from, std::size_t to) const {
  const auto& row = rows_.at(from);
  auto it = std::lower_bound(row.begin(), row.end(), to,
                             [](const Transition& t, std::size_t target) { return t.target < target; });
  return (it != row.end() && it->target == to) ? it->probability : 0.0;
}

MarkovChain estimate(std::span<const Trajectory> trajectories, const EstimateOptions& options) {
  std::vector<std::vector<PolarOffset>> per_traj;
  per_traj.reserve(trajectories.size());
  std::vector<PolarOffset> all;
  for (const auto& t : trajectories) {
    if (t.size() < 3) {
      per_traj.emplace_back();
      continue;
    }
    per_traj.push_back(filter_noise(to_offsets(t), options.filter));
    all.insert(all.end(), per_traj.back().begin(), per_traj.back().end());
  }
  if (all.size() < options.clusters) {
    throw DataError("only " + std::to_string(all.size()) + " offsets survive filtering; need at least " +
                    std::to_string(options.clusters));
  }
  ClusterModel model = fit_clusters(all, options.clusters, options.seed, options.kmeans);

  std::vector<std::vector<ClusterId>> sequences;
  sequences.reserve(per_traj.size());
  for (const auto& offs : per_traj) {
    std::vector<ClusterId> ids;
    ids.reserve(offs.size());
    for (const auto& o : offs) ids.push_back(model.nearest(o));
    sequences.push_back(std::move(ids));
  }
  return MarkovChain::from_sequences(std::move(model), sequences, options.order, options.initial);
}

namespace {

std::uint32_t draw_initial(const MarkovChain& chain, Rng& rng) {
  return static_cast<std::uint32_t>(rng.weighted_index(chain.initial_distribution()));
}

std::uint32_t draw_transition(std::span<const Transition> row, Rng& rng, std::optional<std::uint32_t> avoid) {
  double total = 0.0;
  for (const auto& t : row) {
    if (avoid && t.target == *avoid) continue;
    total += t.probability;
  }
  const double target = rng.uniform() * total;
  double acc = 0.0;
  std::uint32_t last = row.back().target;
  for (const auto& t : row) {
    if ((avoid && t.target == *avoid) || t.probability <= 0.0) continue;
    acc += t.probability;
    last = t.target;
    if (target < acc) return t.target;
  }
  return last;
}

PolarOffset emit(const ClusterModel& clusters, ClusterId id, Rng& rng) {
  if (id < clusters.members.size() && !clusters.members[id].empty()) {
    const auto& m = clusters.members[id];
    return m[rng.below(m.size())];
  }
  return clusters.centroids[id];
}

ChainWalk walk(const MarkovChain& chain, std::uint32_t state, std::size_t steps, const Pose& start, Rng& rng,
               std::optional<std::uint32_t> avoid, const WalkStop& stop) {
  ChainWalk out;
  out.trajectory.points.reserve(steps + 1);
  out.offsets.reserve(steps);
  out.states.reserve(steps + 1);
  out.trajectory.points.push_back(start.position);
  out.states.push_back(state);

  double heading = start.heading;
  Vec2 p = start.position;
  for (std::size_t k = 0; k < steps; ++k) {
    auto row = chain.transitions(state);
    if (row.empty()) {
      state = draw_initial(chain, rng);
      row = chain.transitions(state);
      ++out.restarts;
      spdlog::debug("chain walk hit a dead-end state at step {}; restarting", k);
    }
    const bool avoid_now = k == 0 && avoid && row.size() > 1;
    state = draw_transition(row, rng, avoid_now ? avoid : std::nullopt);
    const PolarOffset o = emit(chain.clusters(), chain.state(state).newest(), rng);
    heading += o.theta;
    p = p + o.rho * Vec2{std::cos(heading), std::sin(heading)};
    out.offsets.push_back(o);
    out.trajectory.points.push_back(p);
    out.states.push_back(state);
    if (stop && stop(p)) break;
  }
  return out;
}

}  // namespace

ChainWalk sample_walk(const MarkovChain& chain, std::size_t steps, const Pose& start, Rng& rng, const WalkStop& stop) {
  if (steps < 1) throw PreconditionError("sample_walk: steps must be >= 1");
  const std::uint32_t s0 = draw_initial(chain, rng);
  return walk(chain, s0, steps, start, rng, std::nullopt, stop);
}

ChainWalk continue_walk(const MarkovChain& chain, std::uint32_t state, std::size_t steps, const Pose& start, Rng& rng,
                        std::optional<std::uint32_t> avoid_target, const WalkStop& stop) {
  if (steps < 1) throw PreconditionError("continue_walk: steps must be >= 1");
  if (state >= chain.state_count()) throw PreconditionError("continue_walk: unknown state");
  return walk(chain, state, steps, start, rng, avoid_target, stop);
}

Trajectory sample_trajectory(const MarkovChain& chain, std::size_t steps, const Pose& start, std::uint64_t seed) {
  Rng rng(seed);
  return sample_walk(chain, steps, start, rng).trajectory;
}

}  // namespace synthtraj
