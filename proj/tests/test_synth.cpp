#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "rdd/errors.hpp"
#include "rdd/io.hpp"
#include "rdd/synth.hpp"

using namespace rdd;
using fixtures::ann;
using fixtures::image;

namespace {

// Four well-separated D00 boxes.
ImageRecord four_boxes(const std::string& id) {
  return image(id, {ann("D00", 10, 10, 60, 60), ann("D00", 110, 10, 160, 60), ann("D00", 210, 10, 260, 60),
                    ann("D00", 310, 10, 360, 60)});
}

std::string serialize(const std::vector<Detection>& dets) {
  std::ostringstream out;
  write_detections(dets, out);
  return out.str();
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("identity parameters echo ground truth") {
  const std::vector<ImageRecord> gts{four_boxes("Japan_1.jpg"), image("Japan_2.jpg", {ann("D40", 0, 0, 600, 600)})};
  const auto r = perturb(gts, {});
  CHECK(r.detections.size() == 5);
  CHECK(r.jitter_fallbacks == 0);
  CHECK(evaluate(r.detections, gts).scores.f1 == 1.0);
  CHECK(expected_counts(gts, {}) == Counts{5, 0, 0});
}

TEST_CASE("every k-th box is dropped") {
  const std::vector<ImageRecord> gts{four_boxes("Japan_1.jpg")};
  PerturbParams p;
  p.drop_every_k = 2;
  const auto report = evaluate(perturb(gts, p).detections, gts);
  CHECK(report.counts.fn == 2);
  CHECK(report.scores.recall == 0.5);

  SUBCASE("nine boxes, k = 3") {
    std::vector<Annotation> nine;
    for (int i = 0; i < 9; ++i) nine.push_back(ann("D10", 60.0 * i, 100, 60.0 * i + 40, 140));
    const std::vector<ImageRecord> g{image("Japan_9.jpg", nine)};
    PerturbParams q;
    q.drop_every_k = 3;
    CHECK(expected_counts(g, q) == Counts{6, 0, 3});
    CHECK(evaluate(perturb(g, q).detections, g).counts == Counts{6, 0, 3});
  }
}

TEST_CASE("false positives avoid ground truth of their class") {
  const std::vector<ImageRecord> gts{image("Japan_1.jpg", {ann("D00", 100, 100, 300, 300)})};
  PerturbParams p;
  p.fp_per_image = 3;
  const auto r = perturb(gts, p);
  CHECK(r.forced_overlaps == 0);
  CHECK(r.detections.size() == 4);
  const auto report = evaluate(r.detections, gts);
  CHECK(report.counts == Counts{1, 3, 0});
  CHECK(report.scores.precision == 0.25);
  for (const auto& d : r.detections) {
    if (d.label() == DamageClass("D00") && !(d.box() == gts[0].ground_truth[0].box)) {
      CHECK(iou(d.box(), gts[0].ground_truth[0].box) == 0.0);
    }
  }
}

TEST_CASE("drops and false positives over two images") {
  const std::vector<ImageRecord> gts{four_boxes("Japan_1.jpg"), four_boxes("Japan_2.jpg")};
  PerturbParams p;
  p.drop_every_k = 2;
  p.fp_per_image = 1;
  CHECK(expected_counts(gts, p) == Counts{4, 2, 4});
  CHECK(evaluate(perturb(gts, p).detections, gts).counts == Counts{4, 2, 4});
}

TEST_CASE("jitter bounds") {
  const BoundingBox box(100, 100, 200, 150);
  CHECK(jitter_iou_lower_bound(box, 0.0) == 1.0);
  CHECK(jitter_iou_lower_bound(box, 25.0) == 0.0);
  // (100 - 10)(50 - 10) / ((100 + 10)(50 + 10))
  CHECK(jitter_iou_lower_bound(box, 5.0) == doctest::Approx(3600.0 / 6600.0));
  const double d = max_safe_jitter(box, 0.5);
  CHECK(jitter_iou_lower_bound(box, d) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(jitter_iou_lower_bound(box, d * 1.01) < 0.5);

  SUBCASE("every displaced copy within the bound keeps the guaranteed IoU") {
    std::mt19937_64 rng(4);
    const double dj = 5.0;
    const double lower = jitter_iou_lower_bound(box, dj);
    std::uniform_real_distribution<double> u(-dj, dj);
    for (int i = 0; i < 5000; ++i) {
      const BoundingBox moved(box.xmin() + u(rng), box.ymin() + u(rng), box.xmax() + u(rng), box.ymax() + u(rng));
      CHECK(iou(box, moved) >= lower);
    }
  }
}

TEST_CASE("unsafe parameters are refused with a reason") {
  SUBCASE("jitter too large for a small box") {
    const std::vector<ImageRecord> gts{image("Japan_1.jpg", {ann("D00", 10, 10, 20, 20)})};
    PerturbParams p;
    p.jitter = 3.0;
    try {
      expected_counts(gts, p);
      FAIL("expected UnsafeParamsError");
    } catch (const UnsafeParamsError& e) {
      CHECK(std::string(e.what()).find("safe jitter") != std::string::npos);
    }
  }
  SUBCASE("overlapping same-class boxes") {
    // Unjittered copies still prefer their own source.
    const std::vector<ImageRecord> near{image("Japan_1.jpg", {ann("D00", 0, 0, 100, 100), ann("D00", 10, 0, 110, 100)})};
    CHECK(expected_counts(near, {}) == Counts{2, 0, 0});
    PerturbParams p;
    p.jitter = 6.0;
    CHECK_THROWS_AS(expected_counts(near, p), UnsafeParamsError);
    const std::vector<ImageRecord> same{image("Japan_1.jpg", {ann("D00", 0, 0, 100, 100), ann("D00", 0, 0, 100, 100)})};
    CHECK_THROWS_AS(expected_counts(same, {}), UnsafeParamsError);
  }
  SUBCASE("no room for a false positive") {
    const std::vector<ImageRecord> gts{image("Japan_1.jpg", {ann("D00", 0, 0, 600, 600)})};
    PerturbParams p;
    p.fp_per_image = 1;
    CHECK_THROWS_AS(expected_counts(gts, p), UnsafeParamsError);
    CHECK(perturb(gts, p).forced_overlaps == 1);
  }
  SUBCASE("invalid parameters") {
    PerturbParams p;
    p.jitter = -1.0;
    CHECK_THROWS_AS(perturb({}, p), ContractError);
    PerturbParams q;
    q.drop_every_k = 0;
    CHECK_THROWS_AS(perturb({}, q), ContractError);
    PerturbParams s;
    s.score = ScoreModel::uniform(0.9, 0.1);
    CHECK_THROWS_AS(perturb({}, s), ContractError);
  }
}

TEST_CASE("excessive jitter falls back to the source box") {
  const std::vector<ImageRecord> gts{image("Japan_1.jpg", {ann("D00", 0, 0, 2, 2)}, 2, 2)};
  PerturbParams p;
  p.jitter = 50.0;
  const auto r = perturb(gts, p);
  REQUIRE(r.detections.size() == 1);
  for (const auto& d : r.detections) {
    CHECK(d.box().xmax() <= 2.0);
    CHECK(d.box().ymax() <= 2.0);
  }
}

TEST_CASE("property: deterministic, valid, and closed under evaluation") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> k(0, 4), fp(0, 3), jitter_pct(0, 100);
  std::uniform_int_distribution<std::uint64_t> seed;
  int closed = 0;
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<ImageRecord> gts;
    for (int i = 0; i < 6; ++i) gts.push_back(fixtures::random_image(rng, "India_" + std::to_string(i) + ".jpg", 6));
    PerturbParams p;
    if (const int kk = k(rng); kk > 0) p.drop_every_k = static_cast<std::size_t>(kk);
    p.fp_per_image = static_cast<std::size_t>(fp(rng));
    p.jitter = jitter_pct(rng) / 100.0 * 3.0;
    p.score = ScoreModel::uniform(0.2, 0.9);
    p.seed = seed(rng);

    const auto a = perturb(gts, p);
    const auto b = perturb(gts, p);
    CHECK(serialize(a.detections) == serialize(b.detections));
    for (const auto& d : a.detections) {
      CHECK(d.score() >= 0.2);
      CHECK(d.score() <= 0.9);
      CHECK(d.box().xmax() <= 600.0);
      CHECK(d.box().ymax() <= 600.0);
    }
    try {
      const auto expected = expected_counts(gts, p);
      CHECK(evaluate(a.detections, gts).counts == expected);
      ++closed;
    } catch (const UnsafeParamsError&) {
    }
  }
  CHECK(closed > 10);
}

TEST_CASE("different seeds give different jitter") {
  const std::vector<ImageRecord> gts{four_boxes("Japan_1.jpg")};
  PerturbParams p;
  p.jitter = 2.0;
  p.seed = 1;
  const auto a = serialize(perturb(gts, p).detections);
  p.seed = 2;
  CHECK(a != serialize(perturb(gts, p).detections));
}

}  // TEST_SUITE
