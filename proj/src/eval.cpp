#include "synthtraj/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "synthtraj/errors.hpp"

namespace synthtraj {

namespace {

void require_horizon(const Trajectory& pred, const Trajectory& gt, std::size_t horizon_steps) {
  if (horizon_steps == 0) throw PreconditionError("horizon must be at least one step");
  if (pred.size() < horizon_steps || gt.size() < horizon_steps) {
    throw PreconditionError("trajectory shorter than horizon " + std::to_string(horizon_steps) + " (pred " +
                            std::to_string(pred.size()) + ", gt " + std::to_string(gt.size()) + ")");
  }
}

// Sum of sorted values, so the aggregate does not depend on sample order.
double stable_mean(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

bool finite(const Trajectory& t) {
  return std::all_of(t.points.begin(), t.points.end(),
                      [](Vec2 p) { return std::isfinite(p.x) && std::isfinite(p.y); });
}

}  // namespace

double ade(const Trajectory& pred, const Trajectory& gt, std::size_t horizon_steps) {
  require_horizon(pred, gt, horizon_steps);
  double sum = 0.0;
  for (std::size_t i = 0; i < horizon_steps; ++i) sum += distance(pred[i], gt[i]);
  return sum / static_cast<double>(horizon_steps);
}

double fde(const Trajectory& pred, const Trajectory& gt, std::size_t horizon_steps) {
  require_horizon(pred, gt, horizon_steps);
  return distance(pred[horizon_steps - 1], gt[horizon_steps - 1]);
}

std::string to_string(EvalMode m) { return m == EvalMode::kTop1 ? "top1" : "best_of_k"; }

EvalReport evaluate(std::span<const PredictionRecord> preds, std::span<const Trajectory> gts,
                    std::span<const std::size_t> horizons) {
  if (preds.size() != gts.size()) throw PreconditionError("predictions and ground truths differ in count");
  if (horizons.empty()) throw PreconditionError("no horizons");
  const std::size_t h_max = *std::max_element(horizons.begin(), horizons.end());
  const std::size_t nh = horizons.size();

  EvalReport report;
  // [horizon] -> per-sample values
  std::vector<std::vector<double>> t_ade(nh), t_fde(nh), b_ade(nh), b_fde(nh);
  std::vector<SampleResult> results;

  for (std::size_t s = 0; s < preds.size(); ++s) {
    const auto& rec = preds[s];
    const Trajectory& gt = gts[s];
    std::string problem;
    if (rec.predictions.empty()) {
      problem = "no predictions";
    } else if (gt.size() < h_max) {
      problem = "ground truth has " + std::to_string(gt.size()) + " points, need " + std::to_string(h_max);
    } else if (!finite(gt)) {
      problem = "non-finite ground truth";
    } else {
      for (std::size_t k = 0; k < rec.predictions.size(); ++k) {
        const auto& p = rec.predictions[k];
        if (p.size() < h_max) {
          problem = "prediction " + std::to_string(k) + " has " + std::to_string(p.size()) + " points, need " +
                    std::to_string(h_max);
          break;
        }
        if (!finite(p)) {
          problem = "prediction " + std::to_string(k) + " is not finite";
          break;
        }
      }
    }
    if (!problem.empty()) {
      report.errors.push_back({rec.id, problem});
      continue;
    }

    SampleResult r{rec.id, rec.predictions.size(), 0, 0, 0, 0};
    for (std::size_t h = 0; h < nh; ++h) {
      const std::size_t steps = horizons[h];
      double best_a = std::numeric_limits<double>::infinity();
      double best_f = std::numeric_limits<double>::infinity();
      for (const auto& p : rec.predictions) {
        best_a = std::min(best_a, ade(p, gt, steps));
        best_f = std::min(best_f, fde(p, gt, steps));
      }
      const double top_a = ade(rec.predictions.front(), gt, steps);
      const double top_f = fde(rec.predictions.front(), gt, steps);
      t_ade[h].push_back(top_a);
      t_fde[h].push_back(top_f);
      b_ade[h].push_back(best_a);
      b_fde[h].push_back(best_f);
      if (steps == h_max) r = {rec.id, rec.predictions.size(), top_a, top_f, best_a, best_f};
    }
    results.push_back(r);
  }

  report.count = results.size();
  for (std::size_t h = 0; h < nh; ++h) {
    report.top1.horizons.push_back({horizons[h], stable_mean(t_ade[h]), stable_mean(t_fde[h])});
    report.best_of_k.horizons.push_back({horizons[h], stable_mean(b_ade[h]), stable_mean(b_fde[h])});
  }
  std::sort(results.begin(), results.end(), [](const SampleResult& a, const SampleResult& b) {
    if (a.top1_fde != b.top1_fde) return a.top1_fde > b.top1_fde;
    return a.id < b.id;
  });
  if (results.size() > 20) results.resize(20);
  report.worst = std::move(results);
  return report;
}

void write_table(std::ostream& os, const EvalReport& report, const std::string& title) {
  if (!title.empty()) os << title << "\n";
  os << "samples: " << report.count << "  errors: " << report.errors.size() << "\n";
  os << "best_of_k: minimum over K per metric and horizon, against ground-truth future 0\n";
  os << std::left << std::setw(10) << "mode";
  for (const auto& h : report.top1.horizons) {
    const double sec = static_cast<double>(h.steps) / 10.0;
    std::ostringstream a, f;
    a << "ADE@" << sec << "s";
    f << "FDE@" << sec << "s";
    os << std::right << std::setw(10) << a.str() << std::setw(10) << f.str();
  }
  os << "\n";
  for (const ModeMetrics* m : {&report.top1, &report.best_of_k}) {
    os << std::left << std::setw(10) << to_string(m->mode) << std::right << std::fixed << std::setprecision(3);
    for (const auto& h : m->horizons) os << std::setw(10) << h.ade << std::setw(10) << h.fde;
    os << "\n";
    os.unsetf(std::ios::fixed);
  }
  if (!report.worst.empty()) {
    os << "worst samples (top-1 FDE at longest horizon):\n";
    for (const auto& w : report.worst) {
      os << "  id " << w.id << "  fde " << std::fixed << std::setprecision(3) << w.top1_fde << "  ade "
         << w.top1_ade << "\n";
      os.unsetf(std::ios::fixed);
    }
  }
  for (const auto& e : report.errors) os << "error: sample " << e.id << ": " << e.message << "\n";
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j;
  j["format"] = "synthtraj-eval-report";
  j["version"] = 1;
  j["best_of_k_selection"] = "per metric and horizon, minimum over K against ground-truth future 0";
  j["count"] = report.count;
  for (const ModeMetrics* m : {&report.top1, &report.best_of_k}) {
    auto arr = nlohmann::json::array();
    for (const auto& h : m->horizons) {
      arr.push_back({{"steps", h.steps}, {"seconds", static_cast<double>(h.steps) / 10.0}, {"ade", h.ade},
                     {"fde", h.fde}});
    }
    j[to_string(m->mode)] = arr;
  }
  auto worst = nlohmann::json::array();
  for (const auto& w : report.worst) {
    worst.push_back({{"id", w.id},
                     {"k", w.k},
                     {"top1_ade", w.top1_ade},
                     {"top1_fde", w.top1_fde},
                     {"best_ade", w.best_ade},
                     {"best_fde", w.best_fde}});
  }
  j["worst"] = worst;
  auto errors = nlohmann::json::array();
  for (const auto& e : report.errors) errors.push_back({{"id", e.id}, {"message", e.message}});
  j["errors"] = errors;
  return j;
}

nlohmann::json predictions_to_json(std::span<const PredictionRecord> records) {
  nlohmann::json doc;
  doc["format"] = "synthtraj-predictions";
  doc["version"] = 1;
  doc["frame"] = "heading-up, meters";
  auto& arr = doc["records"] = nlohmann::json::array();
  for (const auto& r : records) {
    auto preds = nlohmann::json::array();
    for (const auto& t : r.predictions) {
      auto pts = nlohmann::json::array();
      for (const auto& p : t.points) pts.push_back({p.x, p.y});
      preds.push_back(std::move(pts));
    }
    arr.push_back({{"id", r.id}, {"predictions", std::move(preds)}});
  }
  return doc;
}

std::vector<PredictionRecord> predictions_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "synthtraj-predictions") throw DataError("not a prediction file");
    const int version = doc.at("version").get<int>();
    if (version != 1) throw DataError("unsupported prediction file version " + std::to_string(version));
    std::vector<PredictionRecord> out;
    for (const auto& r : doc.at("records")) {
      PredictionRecord rec;
      rec.id = r.at("id").get<std::size_t>();
      for (const auto& t : r.at("predictions")) {
        Trajectory traj;
        for (const auto& p : t) {
          if (!p.is_array() || p.size() != 2) throw DataError("point must be [x, y]");
          // null is how non-finite values come back from JSON
          const double x = p[0].is_null() ? std::nan("") : p[0].get<double>();
          const double y = p[1].is_null() ? std::nan("") : p[1].get<double>();
          traj.points.push_back({x, y});
        }
        rec.predictions.push_back(std::move(traj));
      }
      out.push_back(std::move(rec));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed prediction file: ") + e.what());
  }
}

void write_predictions(const std::filesystem::path& path, std::span<const PredictionRecord> records) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  os << predictions_to_json(records).dump() << "\n";
  if (!os) throw DataError("write failed: " + path.string());
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return predictions_from_json(doc);
}

}  // namespace synthtraj
