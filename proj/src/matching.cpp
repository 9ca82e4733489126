#include "synthtraj/matching.hpp"

#include <algorithm>
#include <limits>

#include "synthtraj/errors.hpp"
#include "synthtraj/rng.hpp"

namespace synthtraj {

std::string to_string(TrajDistance d) {
  switch (d) {
    case TrajDistance::kMeanL2: return "mean_l2";
    case TrajDistance::kSumL2: return "sum_l2";
    case TrajDistance::kFinalL2: return "final_l2";
  }
  return "mean_l2";
}

TrajDistance parse_traj_distance(const std::string& name) {
  if (name == "mean_l2") return TrajDistance::kMeanL2;
  if (name == "sum_l2") return TrajDistance::kSumL2;
  if (name == "final_l2") return TrajDistance::kFinalL2;
  throw PreconditionError("unknown trajectory distance '" + name + "'");
}

namespace {

void require_same_length(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) {
    throw PreconditionError("trajectory length mismatch: " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  }
  if (a.size() == 0) throw PreconditionError("empty trajectory");
}

void require_sets(std::span<const Trajectory> preds, std::span<const Trajectory> gts) {
  if (preds.empty() || gts.empty()) throw PreconditionError("need at least one prediction and one ground truth");
  for (const auto& p : preds) require_same_length(p, gts.front());
  for (const auto& g : gts) require_same_length(g, gts.front());
}

}  // namespace

double trajectory_distance(const Trajectory& a, const Trajectory& b, TrajDistance kind) {
  require_same_length(a, b);
  if (kind == TrajDistance::kFinalL2) return distance(a.points.back(), b.points.back());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += distance(a[i], b[i]);
  return kind == TrajDistance::kSumL2 ? sum : sum / static_cast<double>(a.size());
}

double squared_error(const Trajectory& pred, const Trajectory& gt) {
  require_same_length(pred, gt);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Vec2 d = pred[i] - gt[i];
    sum += d.x * d.x + d.y * d.y;
  }
  return sum / static_cast<double>(pred.size());
}

DistanceMatrix distance_matrix(std::span<const Trajectory> preds, std::span<const Trajectory> gts, TrajDistance kind) {
  require_sets(preds, gts);
  DistanceMatrix m{preds.size(), gts.size(), {}};
  m.values.reserve(m.rows * m.cols);
  for (const auto& p : preds) {
    for (const auto& g : gts) m.values.push_back(trajectory_distance(p, g, kind));
  }
  return m;
}

Assignment greedy_assign(const DistanceMatrix& d) {
  if (d.rows == 0 || d.cols == 0) throw PreconditionError("empty distance matrix");
  Assignment out;
  std::vector<bool> pred_used(d.rows, false), gt_used(d.cols, false);
  const std::size_t rounds = std::min(d.rows, d.cols);
  for (std::size_t k = 0; k < rounds; ++k) {
    IndexPair best{0, 0};
    double best_d = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t i = 0; i < d.rows; ++i) {
      if (pred_used[i]) continue;
      for (std::size_t j = 0; j < d.cols; ++j) {
        if (gt_used[j]) continue;
        if (!found || d(i, j) < best_d) {
          best_d = d(i, j);
          best = {i, j};
          found = true;
        }
      }
    }
    pred_used[best.first] = true;
    gt_used[best.second] = true;
    out.pairs.push_back(best);
  }
  for (std::size_t i = 0; i < d.rows; ++i) {
    if (pred_used[i]) continue;
    std::size_t best_j = 0;
    for (std::size_t j = 1; j < d.cols; ++j) {
      if (d(i, j) < d(i, best_j)) best_j = j;
    }
    out.leftover_pairs.push_back({i, best_j});
  }
  return out;
}

Assignment greedy_assign(std::span<const Trajectory> preds, std::span<const Trajectory> gts, TrajDistance kind) {
  return greedy_assign(distance_matrix(preds, gts, kind));
}

double multimodality_loss(std::span<const Trajectory> preds, std::span<const Trajectory> gts, const Assignment& a) {
  require_sets(preds, gts);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto* list : {&a.pairs, &a.leftover_pairs}) {
    for (const auto& [p, g] : *list) {
      sum += squared_error(preds[p], gts[g]);
      ++n;
    }
  }
  if (n == 0) throw PreconditionError("assignment has no pairs");
  return sum / static_cast<double>(n);
}

double multimodality_loss(std::span<const Trajectory> preds, std::span<const Trajectory> gts, TrajDistance kind) {
  return multimodality_loss(preds, gts, greedy_assign(preds, gts, kind));
}

std::vector<std::vector<Vec2>> multimodality_loss_gradient(std::span<const Trajectory> preds,
                                                           std::span<const Trajectory> gts, const Assignment& a) {
  require_sets(preds, gts);
  const std::size_t t = gts.front().size();
  std::vector<std::vector<Vec2>> grad(preds.size(), std::vector<Vec2>(t));
  const double n = static_cast<double>(a.pairs.size() + a.leftover_pairs.size());
  const double scale = 2.0 / (n * static_cast<double>(t));
  for (const auto* list : {&a.pairs, &a.leftover_pairs}) {
    for (const auto& [p, g] : *list) {
      for (std::size_t i = 0; i < t; ++i) grad[p][i] = grad[p][i] + scale * (preds[p][i] - gts[g][i]);
    }
  }
  return grad;
}

double variety_loss(std::span<const Trajectory> preds, const Trajectory& gt) {
  if (preds.empty()) throw PreconditionError("variety_loss: no predictions");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : preds) best = std::min(best, squared_error(p, gt));
  return best;
}

double mse_loss(std::span<const Trajectory> preds, const Trajectory& gt) {
  if (preds.empty()) throw PreconditionError("mse_loss: no predictions");
  double sum = 0.0;
  for (const auto& p : preds) sum += squared_error(p, gt);
  return sum / static_cast<double>(preds.size());
}

namespace {

Trajectory random_track(Rng& rng, std::size_t length) {
  Trajectory t;
  Vec2 p{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
  double heading = rng.uniform(-kPi, kPi);
  const double speed = rng.uniform(0.0, 1.5);
  for (std::size_t i = 0; i < length; ++i) {
    heading += rng.uniform(-0.1, 0.1);
    p = p + speed * Vec2{std::cos(heading), std::sin(heading)};
    t.points.push_back(p);
  }
  return t;
}

nlohmann::json to_json(const Trajectory& t) {
  auto arr = nlohmann::json::array();
  for (const auto& p : t.points) arr.push_back({p.x, p.y});
  return arr;
}

nlohmann::json to_json(const std::vector<IndexPair>& pairs) {
  auto arr = nlohmann::json::array();
  for (const auto& [p, g] : pairs) arr.push_back({p, g});
  return arr;
}

}  // namespace

nlohmann::json match_vectors(std::uint64_t seed, std::size_t cases) {
  Rng rng(seed);
  nlohmann::json doc;
  doc["format"] = "synthtraj-match-vectors";
  doc["version"] = 1;
  doc["seed"] = seed;
  doc["loss"] = "mean over pairs and leftover pairs of mean squared point error";
  auto& out = doc["cases"] = nlohmann::json::array();
  constexpr TrajDistance kinds[] = {TrajDistance::kMeanL2, TrajDistance::kSumL2, TrajDistance::kFinalL2};
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t k = static_cast<std::size_t>(rng.between(1, 8));
    const std::size_t n_gt = static_cast<std::size_t>(rng.between(1, 5));
    const std::size_t len = c % 4 == 0 ? static_cast<std::size_t>(rng.between(2, 12)) : 40;
    const TrajDistance kind = c % 5 == 4 ? kinds[rng.below(3)] : TrajDistance::kMeanL2;
    std::vector<Trajectory> preds, gts;
    for (std::size_t i = 0; i < n_gt; ++i) gts.push_back(random_track(rng, len));
    for (std::size_t i = 0; i < k; ++i) {
      // Some predictions sit close to a ground truth so matches are non-trivial.
      if (rng.bernoulli(0.5)) {
        Trajectory p = gts[rng.below(n_gt)];
        for (auto& pt : p.points) pt = pt + Vec2{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
        preds.push_back(std::move(p));
      } else {
        preds.push_back(random_track(rng, len));
      }
    }
    const Assignment a = greedy_assign(preds, gts, kind);
    nlohmann::json item;
    item["id"] = c;
    item["distance"] = to_string(kind);
    item["k"] = k;
    item["n_gt"] = n_gt;
    item["length"] = len;
    auto& jp = item["predictions"] = nlohmann::json::array();
    for (const auto& p : preds) jp.push_back(to_json(p));
    auto& jg = item["ground_truths"] = nlohmann::json::array();
    for (const auto& g : gts) jg.push_back(to_json(g));
    item["pairs"] = to_json(a.pairs);
    item["leftover_pairs"] = to_json(a.leftover_pairs);
    item["multimodality_loss"] = multimodality_loss(preds, gts, a);
    item["variety_loss"] = variety_loss(preds, gts.front());
    item["mse_loss"] = mse_loss(preds, gts.front());
    out.push_back(std::move(item));
  }
  return doc;
}

}  // namespace synthtraj
