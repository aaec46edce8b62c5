#include <doctest.h>

#include <cmath>
#include <random>

#include "gtex/metrics.hpp"
#include "oracles.hpp"

using namespace gtex;

namespace {

Keypoint kp_at(double x, double y, double size) {
  Keypoint k;
  k.x = x;
  k.y = y;
  k.size = size;
  return k;
}

// Area ratio by counting lattice points, independent of the closed form.
double lattice_iou(Point2 a, double ra, Point2 b, double rb, double step) {
  long inter = 0, uni = 0;
  const double x0 = std::min(a.x - ra, b.x - rb), x1 = std::max(a.x + ra, b.x + rb);
  const double y0 = std::min(a.y - ra, b.y - rb), y1 = std::max(a.y + ra, b.y + rb);
  for (double y = y0 + step / 2; y < y1; y += step) {
    for (double x = x0 + step / 2; x < x1; x += step) {
      const bool ia = std::hypot(x - a.x, y - a.y) < ra;
      const bool ib = std::hypot(x - b.x, y - b.y) < rb;
      inter += ia && ib;
      uni += ia || ib;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

GroundTruth2D rotation_gt(double angle) {
  GroundTruth2D gt = GroundTruth2D::identity(200, 200);
  gt.angle = angle;
  return gt;
}

}  // namespace

TEST_CASE("disc IoU examples") {
  CHECK(disc_iou({5, 5}, 3, {5, 5}, 3) == doctest::Approx(1.0));
  CHECK(disc_iou({0, 0}, 3, {10, 0}, 3) == 0.0);
  CHECK(disc_iou({0, 0}, 3, {6, 0}, 3) == 0.0);
  const double closed = disc_iou({0, 0}, 10, {10, 0}, 10);
  // Lens area over union; 0.3919 would be the lens over a single disc.
  const double lens = 2 * 100 * std::acos(0.5) - 5 * std::sqrt(300.0);
  CHECK(closed == doctest::Approx(lens / (200 * M_PI - lens)));
  CHECK(closed == doctest::Approx(0.2430).epsilon(1e-3));
  CHECK(lens / (100 * M_PI) == doctest::Approx(0.3919).epsilon(1e-3));
  CHECK(closed == doctest::Approx(lattice_iou({0, 0}, 10, {10, 0}, 10, 0.02)).epsilon(2e-3));
  // Nested discs: area ratio.
  CHECK(disc_iou({0, 0}, 2, {0.5, 0}, 4) == doctest::Approx(0.25));
}

TEST_CASE("property: disc IoU is symmetric and agrees with a lattice count") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> c(-5.0, 5.0), r(0.5, 6.0);
  for (int i = 0; i < 40; ++i) {
    const Point2 a{c(rng), c(rng)}, b{c(rng), c(rng)};
    const double ra = r(rng), rb = r(rng);
    const double iou = disc_iou(a, ra, b, rb);
    CHECK(iou >= 0.0);
    CHECK(iou <= 1.0);
    CHECK(iou == doctest::Approx(disc_iou(b, rb, a, ra)));
    CHECK(std::abs(iou - lattice_iou(a, ra, b, rb, 0.02)) < 0.01);
  }
}

TEST_CASE("keypoint IoU maps the test disc through the ground truth") {
  const GroundTruth2D gt = rotation_gt(90.0);
  const Keypoint ref = kp_at(30, 50, 8);
  const Point2 p = gt.apply({ref.x, ref.y});
  CHECK(keypoint_iou(kp_at(p.x, p.y, 8), ref, gt) == doctest::Approx(1.0));
  GroundTruth2D scaled = GroundTruth2D::identity(200, 200);
  scaled.scale = 2.0;
  const Point2 q = scaled.apply({ref.x, ref.y});
  CHECK(keypoint_iou(kp_at(q.x, q.y, 16), ref, scaled) == doctest::Approx(1.0));
  CHECK(keypoint_iou(ref, ref, GroundTruth2D::identity(200, 200)) == doctest::Approx(1.0));
}

TEST_CASE("repeatability and ambiguity examples") {
  const RegionMask full(0, 0, 200, 200);
  const GroundTruth2D id = GroundTruth2D::identity(200, 200);
  const MetricsConfig cfg;
  std::vector<Keypoint> kps;
  for (int i = 0; i < 10; ++i) kps.push_back(kp_at(20 + 15 * i, 40 + 10 * i, 7));
  SUBCASE("identical sets") {
    const auto s = repeatability_and_ambiguity(kps, kps, id, full, full, cfg);
    CHECK(s.repeatability == 1.0);
    CHECK(s.ambiguity == 1.0);
    CHECK(s.below_n);
    CHECK(s.n_considered == 10);
  }
  SUBCASE("two clustered references per test keypoint") {
    std::vector<Keypoint> ref;
    for (const auto& k : kps) {
      ref.push_back(kp_at(k.x - 0.3, k.y, 7));
      ref.push_back(kp_at(k.x + 0.3, k.y, 7));
    }
    const auto s = repeatability_and_ambiguity(ref, kps, id, full, full, cfg);
    CHECK(s.repeatability == 1.0);
    CHECK(s.ambiguity == 2.0);
  }
  SUBCASE("nothing considered") {
    const auto s = repeatability_and_ambiguity(kps, {}, id, full, full, cfg);
    CHECK_FALSE(s.repeatability.has_value());
    CHECK_FALSE(s.ambiguity.has_value());
  }
  SUBCASE("no overlap") {
    std::vector<Keypoint> far;
    for (const auto& k : kps) far.push_back(kp_at(k.x + 20, k.y, 7));
    const auto s = repeatability_and_ambiguity(kps, far, id, full, full, cfg);
    REQUIRE(s.repeatability.has_value());
    CHECK(*s.repeatability == 0.0);
    CHECK_FALSE(s.ambiguity.has_value());
  }
}

TEST_CASE("property: detection scores equal the all-pairs oracle") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> pos(0.0, 200.0), size(3.0, 12.0), ang(-180.0, 180.0);
  std::uniform_int_distribution<int> count(0, 20), edge(20, 120);
  MetricsConfig cfg;
  for (int trial = 0; trial < 300; ++trial) {
    const GroundTruth2D gt = rotation_gt(trial % 4 == 0 ? 0.0 : ang(rng));
    const int rx = edge(rng) - 20, ry = edge(rng) - 20;
    const RegionMask ref_mask(rx, ry, rx + 80, ry + 80);
    const int tx = edge(rng) - 20, ty = edge(rng) - 20;
    const RegionMask test_mask(tx, ty, tx + 80, ty + 80);
    std::vector<Keypoint> ref, test;
    for (int i = count(rng); i > 0; --i) ref.push_back(kp_at(pos(rng), pos(rng), size(rng)));
    for (int i = count(rng); i > 0; --i) {
      // Half of the test keypoints are ground-truth images of reference ones.
      if (!ref.empty() && i % 2 == 0) {
        const auto& r = ref[static_cast<std::size_t>(i) % ref.size()];
        const Point2 p = gt.apply({r.x + 0.5, r.y});
        test.push_back(kp_at(p.x, p.y, r.size));
      } else {
        test.push_back(kp_at(pos(rng), pos(rng), size(rng)));
      }
    }
    const auto [considered, matched, links] =
        oracle::detection(ref, test, gt, ref_mask, test_mask, cfg.iou_threshold);
    const auto s = repeatability_and_ambiguity(ref, test, gt, ref_mask, test_mask, cfg);
    CHECK(s.n_considered == considered);
    CHECK(s.n_test_kps == static_cast<int>(test.size()));
    if (considered == 0) {
      CHECK_FALSE(s.repeatability.has_value());
    } else {
      REQUIRE(s.repeatability.has_value());
      CHECK(*s.repeatability == doctest::Approx(static_cast<double>(matched) / considered));
    }
    if (matched == 0) {
      CHECK_FALSE(s.ambiguity.has_value());
    } else {
      REQUIRE(s.ambiguity.has_value());
      CHECK(*s.ambiguity == doctest::Approx(static_cast<double>(links) / matched));
      CHECK(*s.ambiguity >= 1.0);
    }
  }
}

TEST_CASE("match precision") {
  const GroundTruth2D id = GroundTruth2D::identity(100, 100);
  std::vector<Keypoint> test, ref;
  std::vector<Match> matches;
  for (int i = 0; i < 10; ++i) {
    test.push_back(kp_at(5.0 + 9 * i, 50, 6));
    ref.push_back(kp_at(5.0 + 9 * i + (i < 8 ? 0.0 : 4.0), 50, 6));
    matches.push_back({i, i, 0.0, 0.0});
  }
  const auto s = match_correctness(matches, test, ref, id, MetricsConfig{});
  CHECK(s.n_matches == 10);
  CHECK(s.n_correct == 8);
  CHECK(s.precision == doctest::Approx(0.8));

  const auto none = match_correctness({}, test, ref, id, MetricsConfig{});
  CHECK(none.n_correct == 0);
  CHECK_FALSE(none.precision.has_value());
  CHECK_THROWS_AS(match_correctness({{10, 0, 0.0, 0.0}}, test, ref, id, MetricsConfig{}), MetricsError);
}

TEST_CASE("pose success thresholds") {
  GroundTruth2D gt = rotation_gt(40.0);
  gt.tx = 12.0;
  gt.ty = -3.0;
  const MetricsConfig cfg;
  const Pose2D truth = gt.test_to_reference();
  CHECK(pose_success(truth, gt, cfg));
  CHECK_FALSE(pose_success(std::nullopt, gt, cfg));

  Pose2D shifted = truth;
  shifted.tx += 31.0;
  CHECK_FALSE(pose_success(shifted, gt, cfg));
  shifted.tx -= 2.0;
  CHECK(pose_success(shifted, gt, cfg));

  // 1.4 degrees about the mapped center, plus a (3, 4) px offset.
  const Point2 c = truth.apply({gt.cx, gt.cy});
  const Pose2D turn{1.4, 0.0, 0.0, 1.0};
  const Point2 rc = turn.apply(c);
  const Pose2D nudge{1.4, c.x - rc.x + 3.0, c.y - rc.y + 4.0, 1.0};
  const Pose2D off = nudge.compose(truth);
  CHECK(distance(off.apply({gt.cx, gt.cy}), c) == doctest::Approx(5.0));
  CHECK(pose_success(off, gt, cfg));
  // Turning about the origin of the reference frame moves the center too.
  CHECK_FALSE(pose_success(Pose2D{1.6, 0, 0, 1}.compose(truth), gt, cfg));
  const Pose2D wrapped{nudge.angle - 360.0, nudge.tx, nudge.ty, 1.0};
  CHECK(pose_success(wrapped.compose(truth), gt, cfg));
}

TEST_CASE("success rate") {
  std::vector<bool> flags(93, true);
  flags.insert(flags.end(), 7, false);
  CHECK(success_rate(flags) == doctest::Approx(0.93));
  CHECK(success_rate(std::vector<bool>(5, false)) == 0.0);
  CHECK(success_rate(std::vector<bool>(5, true)) == 1.0);
  CHECK_THROWS_AS(success_rate({}), MetricsError);
}

TEST_CASE("metrics config validation") {
  MetricsConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.iou_threshold = 0.0;
  CHECK_THROWS_AS(cfg.validate(), MetricsError);
  cfg = MetricsConfig{};
  cfg.pos_threshold = -1.0;
  CHECK_THROWS_AS(cfg.validate(), MetricsError);
}
