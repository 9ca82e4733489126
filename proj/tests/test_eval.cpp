#include <doctest.h>

#include <sstream>

#include "support.hpp"
#include "synthtraj/errors.hpp"
#include "synthtraj/eval.hpp"

using namespace synthtraj;
using namespace synthtraj::testing;

TEST_SUITE("eval") {
  TEST_CASE("ade and fde hand values") {
    const Trajectory gt = line({0, 1}, {0, 1}, 40);
    Trajectory pred = gt;
    for (std::size_t i = 0; i < 40; ++i) pred.points[i].x += static_cast<double>(i + 1) * 0.1;
    CHECK(fde(pred, gt, 40) == doctest::Approx(4.0));
    CHECK(fde(pred, gt, 10) == doctest::Approx(1.0));
    // Mean of 0.1, 0.2, ..., 1.0.
    CHECK(ade(pred, gt, 10) == doctest::Approx(0.55));
    CHECK(ade(gt, gt, 40) == 0.0);
    CHECK_THROWS_AS(ade(pred, line({0, 0}, {1, 0}, 5), 10), PreconditionError);
    CHECK_THROWS_AS(fde(pred, gt, 0), PreconditionError);
  }

  TEST_CASE("ade and fde are symmetric and rigid-motion invariant") {
    Rng rng(1);
    for (int c = 0; c < 200; ++c) {
      const Trajectory a = random_points(rng, 40);
      const Trajectory b = random_points(rng, 40);
      CHECK(ade(a, b, 40) == doctest::Approx(ade(b, a, 40)));
      CHECK(fde(a, b, 40) == doctest::Approx(fde(b, a, 40)));
      const double ang = rng.uniform(-kPi, kPi);
      const Vec2 s{rng.uniform(-9, 9), rng.uniform(-9, 9)};
      CHECK(ade(rotated(a, ang, s), rotated(b, ang, s), 30) == doctest::Approx(ade(a, b, 30)));
      CHECK(fde(rotated(a, ang, s), rotated(b, ang, s), 30) == doctest::Approx(fde(a, b, 30)));
    }
  }

  TEST_CASE("single prediction gives identical top-1 and best-of-k") {
    Rng rng(2);
    std::vector<PredictionRecord> preds;
    std::vector<Trajectory> gts;
    for (std::size_t s = 0; s < 30; ++s) {
      preds.push_back({s, {random_points(rng, 40)}});
      gts.push_back(random_points(rng, 40));
    }
    const EvalReport r = evaluate(preds, gts);
    CHECK(r.count == 30);
    REQUIRE(r.top1.horizons.size() == 4);
    for (std::size_t h = 0; h < 4; ++h) {
      CHECK(r.top1.horizons[h].steps == kHorizonSteps[h]);
      CHECK(r.top1.horizons[h].ade == r.best_of_k.horizons[h].ade);
      CHECK(r.top1.horizons[h].fde == r.best_of_k.horizons[h].fde);
    }
  }

  TEST_CASE("best-of-k never exceeds top-1 and is selected per horizon") {
    // Prediction 0 is perfect early and off late; prediction 1 the reverse.
    const Trajectory gt = line({0, 1}, {0, 1}, 40);
    Trajectory early = gt, late = gt;
    for (std::size_t i = 20; i < 40; ++i) early.points[i].x += 2.0;
    for (std::size_t i = 0; i < 20; ++i) late.points[i].x += 2.0;
    const std::vector<PredictionRecord> preds{{0, {early, late}}};
    const std::vector<Trajectory> gts{gt};
    const EvalReport r = evaluate(preds, gts);
    CHECK(r.best_of_k.horizons[0].fde == 0.0);
    CHECK(r.best_of_k.horizons[3].fde == 0.0);
    CHECK(r.top1.horizons[3].fde == doctest::Approx(2.0));
    CHECK(r.best_of_k.horizons[3].ade == doctest::Approx(1.0));

    Rng rng(3);
    std::vector<PredictionRecord> many;
    std::vector<Trajectory> many_gt;
    for (std::size_t s = 0; s < 50; ++s) {
      PredictionRecord rec{s, {}};
      for (int k = 0; k < 5; ++k) rec.predictions.push_back(random_points(rng, 40));
      many.push_back(rec);
      many_gt.push_back(random_points(rng, 40));
    }
    const EvalReport m = evaluate(many, many_gt);
    for (std::size_t h = 0; h < 4; ++h) {
      CHECK(m.best_of_k.horizons[h].ade <= m.top1.horizons[h].ade);
      CHECK(m.best_of_k.horizons[h].fde <= m.top1.horizons[h].fde);
    }
    CHECK(m.worst.size() == 20);
    for (std::size_t i = 1; i < m.worst.size(); ++i) CHECK(m.worst[i - 1].top1_fde >= m.worst[i].top1_fde);
  }

  TEST_CASE("aggregates do not depend on sample order") {
    Rng rng(4);
    std::vector<PredictionRecord> preds;
    std::vector<Trajectory> gts;
    for (std::size_t s = 0; s < 100; ++s) {
      preds.push_back({s, {random_points(rng, 40, 100.0), random_points(rng, 40, 0.01)}});
      gts.push_back(random_points(rng, 40));
    }
    const EvalReport a = evaluate(preds, gts);
    std::reverse(preds.begin(), preds.end());
    std::reverse(gts.begin(), gts.end());
    const EvalReport b = evaluate(preds, gts);
    for (std::size_t h = 0; h < 4; ++h) {
      CHECK(a.top1.horizons[h].ade == b.top1.horizons[h].ade);
      CHECK(a.best_of_k.horizons[h].fde == b.best_of_k.horizons[h].fde);
    }
  }

  TEST_CASE("malformed samples become errors") {
    const Trajectory gt = line({0, 1}, {0, 1}, 40);
    Trajectory nan = gt;
    nan.points[3].x = NAN;
    const std::vector<PredictionRecord> preds{{0, {gt}}, {1, {}}, {2, {line({0, 0}, {0, 1}, 10)}}, {3, {nan}}};
    const std::vector<Trajectory> gts{gt, gt, gt, gt};
    const EvalReport r = evaluate(preds, gts);
    CHECK(r.count == 1);
    REQUIRE(r.errors.size() == 3);
    CHECK(r.errors[0].id == 1);
    CHECK(r.errors[1].id == 2);
    CHECK(r.errors[2].id == 3);
    CHECK(r.top1.horizons[3].fde == 0.0);
    CHECK_THROWS_AS(evaluate(preds, std::span<const Trajectory>(gts).first(2)), PreconditionError);

    std::ostringstream os;
    write_table(os, r, "demo");
    CHECK(os.str().find("FDE@4s") != std::string::npos);
    CHECK(os.str().find("error: sample 2") != std::string::npos);
    const auto j = to_json(r);
    CHECK(j["count"] == 1);
    CHECK(j["errors"].size() == 3);
    CHECK(j["top1"][3]["seconds"] == 4.0);
  }

  TEST_CASE("prediction files round trip exactly") {
    Rng rng(5);
    std::vector<PredictionRecord> recs;
    for (std::size_t s = 0; s < 20; ++s) {
      PredictionRecord r{s * 3, {}};
      for (int k = 0; k < 3; ++k) r.predictions.push_back(random_points(rng, 40));
      recs.push_back(r);
    }
    const auto path = temp_dir("preds") / "p.json";
    write_predictions(path, recs);
    const auto back = read_predictions(path);
    REQUIRE(back.size() == recs.size());
    for (std::size_t s = 0; s < recs.size(); ++s) {
      CHECK(back[s].id == recs[s].id);
      CHECK(back[s].predictions == recs[s].predictions);
    }

    nlohmann::json doc = predictions_to_json(recs);
    doc["version"] = 2;
    CHECK_THROWS_AS(predictions_from_json(doc), DataError);
    CHECK_THROWS_AS(predictions_from_json(nlohmann::json::object()), DataError);
    CHECK_THROWS_AS(read_predictions(path.parent_path() / "missing.json"), DataError);
  }
}
