#include <doctest.h>

#include <cmath>
#include <random>

#include "gtex/matchpose.hpp"
#include "oracles.hpp"

using namespace gtex;

namespace {

Descriptor random_binary(std::mt19937_64& rng) {
  Descriptor d;
  for (auto& w : d.bits) w = rng();
  return d;
}

Descriptor random_real(std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 0.2f);
  Descriptor d;
  d.kind = DescriptorKind::kReal;
  d.values.resize(kRealLength);
  for (auto& v : d.values) v = u(rng);
  return d;
}

Descriptor real_of(std::vector<float> v) {
  Descriptor d;
  d.kind = DescriptorKind::kReal;
  d.values = std::move(v);
  return d;
}

Keypoint kp_at(Point2 p) {
  Keypoint k;
  k.x = p.x;
  k.y = p.y;
  return k;
}

struct PlantedMatches {
  std::vector<Match> matches;
  std::vector<Keypoint> test;
  std::vector<Keypoint> ref;
};

// Test keypoints map into the reference through `pose`; the last `outliers`
// reference keypoints are replaced by uniform random ones.
PlantedMatches planted(const Pose2D& pose, int inliers, int outliers, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 500.0);
  PlantedMatches m;
  for (int i = 0; i < inliers + outliers; ++i) {
    const Point2 p{u(rng), u(rng)};
    m.test.push_back(kp_at(p));
    m.ref.push_back(kp_at(i < inliers ? pose.apply(p) : Point2{u(rng), u(rng)}));
    m.matches.push_back({i, i, 0.0, 0.0});
  }
  return m;
}

}  // namespace

TEST_CASE("descriptor distances") {
  Descriptor zeros, ones;
  ones.bits.fill(~std::uint64_t{0});
  CHECK(descriptor_distance(zeros, zeros) == 0.0);
  CHECK(descriptor_distance(zeros, ones) == 256.0);
  const Descriptor r = real_of({0.0f, 3.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f, 4.0f});
  CHECK(descriptor_distance(r, r) == 0.0);
  CHECK(descriptor_distance(r, real_of(std::vector<float>(9, 0.0f))) == doctest::Approx(5.0));
  CHECK_THROWS_AS(descriptor_distance(zeros, r), MatchError);
}

TEST_CASE("property: hamming equals the per-bit oracle and L2 the double oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const Descriptor a = random_binary(rng), b = random_binary(rng);
    int n = 0;
    for (int i = 0; i < kBinaryBits; ++i) n += a.bit(i) != b.bit(i);
    CHECK(descriptor_distance(a, b) == n);
    const Descriptor x = random_real(rng), y = random_real(rng);
    double s = 0.0;
    for (int i = 0; i < kRealLength; ++i) s += std::pow(static_cast<double>(x.values[i]) - y.values[i], 2);
    CHECK(descriptor_distance(x, y) == doctest::Approx(std::sqrt(s)).epsilon(1e-6));
  }
}

TEST_CASE("ratio test examples") {
  const Descriptor t = real_of({0.0f, 0.0f});
  SUBCASE("d1 = 0.5 and d2 = 1.0 is a match") {
    const auto m = match_ratio_test({t}, {real_of({1.0f, 0.0f}), real_of({0.5f, 0.0f})});
    REQUIRE(m.size() == 1);
    CHECK(m[0].ref_index == 1);
    CHECK(m[0].ratio == doctest::Approx(0.5));
    CHECK(m[0].distance == doctest::Approx(0.5));
  }
  SUBCASE("equal distances are rejected") {
    CHECK(match_ratio_test({t}, {real_of({1.0f, 0.0f}), real_of({0.0f, 1.0f})}).empty());
  }
  SUBCASE("two exact copies give d2 = 0") {
    CHECK(match_ratio_test({t}, {t, t}).empty());
  }
  SUBCASE("fewer than two references") {
    CHECK(match_ratio_test({t}, {real_of({1.0f, 0.0f})}).empty());
    CHECK(match_ratio_test({t}, {}).empty());
  }
}

TEST_CASE("property: ratio test equals the exhaustive oracle") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> count(0, 40);
  for (int set = 0; set < 200; ++set) {
    const bool binary = set % 2 == 0;
    std::vector<Descriptor> test, ref;
    const int nt = count(rng), nr = count(rng);
    for (int i = 0; i < nt; ++i) test.push_back(binary ? random_binary(rng) : random_real(rng));
    for (int i = 0; i < nr; ++i) ref.push_back(binary ? random_binary(rng) : random_real(rng));
    // Near-duplicates so that some ratios pass.
    for (int i = 0; i < nt && nr > 0; i += 3) {
      test[i] = ref[static_cast<std::size_t>(i) % ref.size()];
      if (binary) test[i].bits[0] ^= rng() & rng();
    }
    const double threshold = set % 3 == 0 ? 0.9 : 0.7;
    CHECK(match_ratio_test(test, ref, threshold) == oracle::ratio_matches(test, ref, threshold));
  }
}

TEST_CASE("least squares recovers an exact pose") {
  const Pose2D truth{30.0, 5.0, -7.0, 1.0};
  std::vector<std::pair<Point2, Point2>> pairs;
  for (Point2 p : {Point2{0, 0}, Point2{10, 3}, Point2{-4, 8}, Point2{7, -9}}) pairs.push_back({p, truth.apply(p)});
  const Pose2D rigid = estimate_euclidean_lsq(pairs, false);
  CHECK(rigid.angle == doctest::Approx(30.0).epsilon(1e-9));
  CHECK(rigid.tx == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(rigid.ty == doctest::Approx(-7.0).epsilon(1e-9));
  CHECK(rigid.scale == 1.0);

  std::vector<std::pair<Point2, Point2>> same;
  for (const auto& p : pairs) same.push_back({p.first, p.first});
  const Pose2D id = estimate_euclidean_lsq(same, true);
  CHECK(std::abs(id.angle) < 1e-12);
  CHECK(std::abs(id.tx) < 1e-12);
  CHECK(std::abs(id.ty) < 1e-12);
  CHECK(id.scale == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("property: planted similarity transforms are recovered") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ang(-179.0, 179.0), t(-300.0, 300.0), p(0.0, 1000.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Pose2D truth{ang(rng), t(rng), t(rng), 1.05};
    std::vector<std::pair<Point2, Point2>> pairs;
    for (int i = 0; i < 20; ++i) {
      const Point2 a{p(rng), p(rng)};
      pairs.push_back({a, truth.apply(a)});
    }
    const Pose2D got = estimate_euclidean_lsq(pairs, true);
    CHECK(std::abs(wrap_angle_deg(got.angle - truth.angle)) < 1e-7);
    CHECK(std::abs(got.tx - truth.tx) < 1e-7);
    CHECK(std::abs(got.ty - truth.ty) < 1e-7);
    CHECK(std::abs(got.scale - truth.scale) < 1e-7);
    CHECK(pose_residual(got, pairs) < 1e-12);
  }
}

TEST_CASE("degenerate least squares inputs") {
  CHECK_THROWS_AS(estimate_euclidean_lsq({}, true), PoseError);
  CHECK_THROWS_AS(estimate_euclidean_lsq({{{1, 1}, {2, 2}}}, true), PoseError);
  CHECK_THROWS_AS(estimate_euclidean_lsq({{{1, 1}, {2, 2}}, {{1, 1}, {5, 2}}}, false), PoseError);
}

TEST_CASE("RANSAC without outliers") {
  const Pose2D truth{10.0, 3.0, 4.0, 1.0};
  const auto m = planted(truth, 100, 0, 1);
  const auto r = ransac_pose(m.matches, m.test, m.ref, RansacConfig{});
  REQUIRE(r.has_value());
  CHECK(r->inliers.size() == 100);
  CHECK(std::abs(r->pose.angle - 10.0) < 1e-6);
  CHECK(std::abs(r->pose.tx - 3.0) < 1e-6);
  CHECK(std::abs(r->pose.ty - 4.0) < 1e-6);
  CHECK(std::abs(r->pose.scale - 1.0) < 1e-6);
  CHECK(r->mean_error < 1e-6);
}

TEST_CASE("property: RANSAC recovers planted poses among outliers") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> ang(-180.0, 180.0), t(-100.0, 100.0);
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Pose2D truth{ang(rng), t(rng), t(rng), 1.0};
    const auto m = planted(truth, 70, 30, 1000 + seed);
    RansacConfig cfg;
    cfg.seed = seed;
    const auto r = ransac_pose(m.matches, m.test, m.ref, cfg);
    ok += r && std::abs(wrap_angle_deg(r->pose.angle - truth.angle)) < 0.05 && std::abs(r->pose.tx - truth.tx) < 0.2 &&
          std::abs(r->pose.ty - truth.ty) < 0.2 && r->inliers.size() >= 68;
  }
  CHECK(ok >= 49);
}

TEST_CASE("RANSAC reports no pose") {
  // Four matches with mutually inconsistent geometry.
  const std::vector<Keypoint> test = {kp_at({0, 0}), kp_at({100, 0}), kp_at({0, 100}), kp_at({100, 100})};
  const std::vector<Keypoint> ref = {kp_at({50, 50}), kp_at({400, 20}), kp_at({10, 300}), kp_at({250, 260})};
  std::vector<Match> matches;
  for (int i = 0; i < 4; ++i) matches.push_back({i, i, 0.0, 0.0});
  CHECK_FALSE(ransac_pose(matches, test, ref, RansacConfig{}).has_value());
  CHECK_FALSE(ransac_pose({matches[0]}, test, ref, RansacConfig{}).has_value());
  CHECK_FALSE(ransac_pose({}, test, ref, RansacConfig{}).has_value());
}

TEST_CASE("RANSAC rejects scales outside the bounds") {
  const auto m = planted(Pose2D{20.0, 1.0, 2.0, 1.3}, 50, 0, 4);
  CHECK_FALSE(ransac_pose(m.matches, m.test, m.ref, RansacConfig{}).has_value());
  RansacConfig rigid;
  rigid.with_scale = false;
  const auto near = planted(Pose2D{20.0, 1.0, 2.0, 1.0}, 50, 0, 4);
  const auto r = ransac_pose(near.matches, near.test, near.ref, rigid);
  REQUIRE(r.has_value());
  CHECK(r->pose.scale == 1.0);
}

TEST_CASE("RANSAC is deterministic per seed") {
  const auto m = planted(Pose2D{-75.0, 30.0, -12.0, 1.0}, 40, 60, 9);
  RansacConfig cfg;
  cfg.seed = 42;
  const auto a = ransac_pose(m.matches, m.test, m.ref, cfg);
  const auto b = ransac_pose(m.matches, m.test, m.ref, cfg);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(a->inliers == b->inliers);
  CHECK(a->pose.angle == b->pose.angle);
  CHECK(a->pose.tx == b->pose.tx);
}

TEST_CASE("RANSAC config validation") {
  RansacConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), PoseError);
  cfg = RansacConfig{};
  cfg.scale_min = 1.05;
  CHECK_THROWS_AS(cfg.validate(), PoseError);
  cfg = RansacConfig{};
  cfg.inlier_threshold = 0.0;
  CHECK_THROWS_AS(cfg.validate(), PoseError);
}
