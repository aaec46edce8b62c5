#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "gtex/detect.hpp"
#include "gtex/synth.hpp"

using namespace gtex;

namespace {

GrayImage random_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> v(0, 255);
  GrayImage img(w, h);
  for (auto& p : img.data()) p = static_cast<std::uint8_t>(v(rng));
  return img;
}

// Rectangle overlap of two s x s squares offset by d on both axes.
double oracle_iou(int s, int d) {
  const double inter = static_cast<double>(s - d) * (s - d);
  return inter / (2.0 * s * s - inter);
}

}  // namespace

TEST_CASE("gamma table matches the power law for every input") {
  for (double gamma : {0.1, 0.5, 1.0, 1.5, 2.2, 3.0}) {
    const auto lut = gamma_lut(gamma);
    REQUIRE(lut.size() == 256);
    for (int g = 0; g < 256; ++g) {
      const long expect = std::lround(255.0 * std::pow(g / 255.0, gamma));
      CHECK(static_cast<long>(lut[static_cast<std::size_t>(g)]) == expect);
    }
  }
  CHECK(gamma_lut(2.0)[64] == 16);
  CHECK(gamma_lut(0.37)[255] == 255);
}

TEST_CASE("gamma of one is the identity and bad exponents are rejected") {
  const GrayImage img = random_image(13, 7, 2);
  CHECK(apply_gamma(img, 1.0) == img);
  CHECK_THROWS_AS(apply_gamma(img, 0.05), SynthError);
  CHECK_THROWS_AS(apply_gamma(img, 3.5), SynthError);
}

TEST_CASE("noise: zero sigma, determinism and statistics") {
  const GrayImage img = random_image(31, 17, 4);
  CHECK(apply_noise(img, 0.0, 9) == img);
  CHECK(apply_noise(img, 7.0, 9) == apply_noise(img, 7.0, 9));
  CHECK(apply_noise(img, 7.0, 9) != apply_noise(img, 7.0, 10));

  const GrayImage gray(1000, 1000, 128);
  const GrayImage noisy = apply_noise(gray, 10.0, 123);
  double sum = 0.0, sum2 = 0.0;
  for (auto v : noisy.data()) {
    sum += v;
    sum2 += static_cast<double>(v) * v;
  }
  const double n = static_cast<double>(noisy.data().size());
  const double mean = sum / n;
  const double sd = std::sqrt(sum2 / n - mean * mean);
  CHECK(std::abs(mean - 128.0) < 0.1);
  CHECK(std::abs(sd - 10.0) < 0.2);
  CHECK_THROWS_AS(apply_noise(gray, 41.0, 1), SynthError);
}

TEST_CASE("translation masks: closed-form offsets") {
  CHECK(diagonal_offset_iou(100, 100, 18) == doctest::Approx(oracle_iou(100, 18)));
  const auto same = make_translation_masks(512, 512, 1.0, 100);
  CHECK(same.offset == 0);
  CHECK(same.ref.x0() == same.test.x0());
  CHECK(same.ref.y1() == same.test.y1());
  CHECK(make_translation_masks(512, 512, 0.5, 100).offset == 18);
  const auto low = make_translation_masks(512, 512, 0.2, 100);
  CHECK(low.offset == 42);
  CHECK(low.iou == doctest::Approx(oracle_iou(100, 42)));
  CHECK(low.iou == doctest::Approx(0.2018).epsilon(1e-3));
}

TEST_CASE("property: chosen translation offset is the closest integer sweep result") {
  for (int s : {40, 100, 257}) {
    for (double target = 0.2; target <= 1.0; target += 0.05) {
      int best = 0;
      for (int d = 0; d < s; ++d) {
        if (std::abs(oracle_iou(s, d) - target) < std::abs(oracle_iou(s, best) - target)) best = d;
      }
      const auto m = make_translation_masks(2 * s, 2 * s, target, s);
      CHECK(m.offset == best);
      CHECK(m.test.x0() - m.ref.x0() == m.offset);
      CHECK(m.test.y0() - m.ref.y0() == m.offset);
      CHECK(rect_iou(m.ref, m.test) == doctest::Approx(m.iou));
      CHECK(m.gt.tx == -m.offset);
      CHECK(m.gt.ty == -m.offset);
      // The union of both masks is centered in the frame (to the pixel).
      CHECK(std::abs(m.ref.x0() + m.test.x1() - 2 * s) <= 1);
      CHECK(std::abs(m.ref.y0() + m.test.y1() - 2 * s) <= 1);
    }
  }
}

TEST_CASE("translation masks reject infeasible requests") {
  CHECK_THROWS_AS(make_translation_masks(100, 100, 0.2, 90), SynthError);
  CHECK_THROWS_AS(make_translation_masks(512, 512, 0.1, 100), SynthError);
}

TEST_CASE("rotation case geometry") {
  const GrayImage img = random_image(33, 33, 6);
  const auto zero = rotation_case(img, 0.0);
  CHECK(zero.test == img);
  CHECK(zero.gt.angle == 0.0);
  CHECK(zero.valid.count_valid(33, 33) == 33u * 33u);
  // Bitmap and rectangle agree on sub-pixel positions near the edge.
  const RegionMask inner = zero.valid.eroded(2);
  CHECK(inner.contains(30.7, 10.0));
  CHECK_FALSE(inner.contains(31.0, 10.0));
  CHECK(inner.contains(2.0, 2.0));
  CHECK_FALSE(inner.contains(1.9, 2.0));

  const auto quarter = rotation_case(img, 90.0);
  CHECK(quarter.valid.count_valid(33, 33) == 33u * 33u);
  const Point2 c = quarter.gt.apply({0.0, 0.0});
  CHECK(c.x == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(c.y == doctest::Approx(32.0));
  // Content follows the ground truth.
  for (int y = 0; y < 33; y += 4) {
    for (int x = 0; x < 33; x += 4) {
      const Point2 q = quarter.gt.apply({static_cast<double>(x), static_cast<double>(y)});
      CHECK(quarter.test.at(static_cast<int>(std::lround(q.x)), static_cast<int>(std::lround(q.y))) == img.at(x, y));
    }
  }

  const auto diag = rotation_case(img, 45.0);
  CHECK_FALSE(diag.valid.contains(0.0, 0.0));
  CHECK_FALSE(diag.valid.contains(32.0, 0.0));
  CHECK_FALSE(diag.valid.contains(0.0, 32.0));
  CHECK_FALSE(diag.valid.contains(32.0, 32.0));
  CHECK(diag.valid.contains(16.0, 16.0));
  CHECK(diag.valid.count_valid(33, 33) < 33u * 33u);
}

TEST_CASE("textures are deterministic and use the full range") {
  for (TextureKind k : {TextureKind::kBlobs, TextureKind::kFractalNoise, TextureKind::kSpeckle}) {
    const GrayImage a = generate_texture(k, 128, 96, 5);
    CHECK(a == generate_texture(k, 128, 96, 5));
    CHECK(a != generate_texture(k, 128, 96, 6));
    std::set<int> levels(a.data().begin(), a.data().end());
    CHECK(levels.size() > 100);
    CHECK(texture_kind_from_string(to_string(k)) == k);
  }
  const GrayImage speckle = generate_texture(TextureKind::kSpeckle, 256, 256, 1);
  CHECK(std::set<int>(speckle.data().begin(), speckle.data().end()).size() >= 200);
}

TEST_CASE("blob fixture gives the harris detector enough keypoints") {
  const GrayImage blobs = generate_texture(TextureKind::kBlobs, 512, 512, 1);
  CHECK(detect("harris", blobs, DetectorConfig{}).size() >= 100);
}

TEST_CASE("transform suite") {
  CHECK(transform_suite({}, 512, 512).empty());
  const auto sweep = default_sweep();
  const auto cases = transform_suite(sweep, 512, 512);
  CHECK(cases.size() == 18);
  std::set<TransformKind> kinds;
  for (const auto& c : cases) kinds.insert(c.spec.kind);
  CHECK(kinds.size() == 4);

  const auto t = transform_suite({{TransformKind::kTranslation, 0.6, 0}}, 512, 512);
  REQUIRE(t.size() == 1);
  CHECK(t[0].gt.angle == 0.0);
  CHECK(t[0].gt.tx == t[0].gt.ty);
  CHECK(t[0].gt.tx < 0.0);
  CHECK_THROWS_AS(TransformSpec({TransformKind::kRotation, 190.0, 0}).validate(), SynthError);
}

TEST_CASE("property: eval pairs follow their ground truth") {
  const GrayImage src = generate_texture(TextureKind::kFractalNoise, 256, 256, 3);
  SUBCASE("translation") {
    const EvalPair p = make_eval_pair(src, {{TransformKind::kTranslation, 0.5, 0}});
    int checked = 0;
    for (int y = p.ref_mask.y0(); y < p.ref_mask.y1(); y += 3) {
      for (int x = p.ref_mask.x0(); x < p.ref_mask.x1(); x += 3) {
        const Point2 q = p.gt.apply({static_cast<double>(x), static_cast<double>(y)});
        if (!p.test_mask.contains(q)) continue;
        CHECK(p.test.at(static_cast<int>(q.x), static_cast<int>(q.y)) == p.ref.at(x, y));
        ++checked;
      }
    }
    CHECK(checked > 100);
  }
  SUBCASE("rotation") {
    const EvalPair p = make_eval_pair(src, {{TransformKind::kRotation, 180.0, 0}});
    for (int y = 20; y < 236; y += 7) {
      for (int x = 20; x < 236; x += 7) {
        const Point2 q = p.gt.apply({static_cast<double>(x), static_cast<double>(y)});
        CHECK(p.test.at(static_cast<int>(std::lround(q.x)), static_cast<int>(std::lround(q.y))) == p.ref.at(x, y));
      }
    }
  }
  SUBCASE("photometric transforms leave geometry alone") {
    const EvalPair p = make_eval_pair(src, {{TransformKind::kGamma, 2.0, 0}, {TransformKind::kNoise, 5.0, 1}});
    CHECK(p.gt.angle == 0.0);
    CHECK(p.gt.tx == 0.0);
    CHECK(p.ref == src);
  }
  SUBCASE("two geometric transforms are rejected") {
    CHECK_THROWS_AS(
        make_eval_pair(src, {{TransformKind::kRotation, 10.0, 0}, {TransformKind::kTranslation, 0.5, 0}}),
        SynthError);
  }
}

TEST_CASE("region masks") {
  const RegionMask m(2, 3, 10, 8);
  CHECK(m.contains(2.0, 3.0));
  CHECK_FALSE(m.contains(10.0, 5.0));
  CHECK(m.count_valid(20, 20) == 40u);
  const RegionMask e = m.eroded(1);
  CHECK(e.x0() == 3);
  CHECK(e.y1() == 7);
  const RegionMask t = m.translated(-2, 1);
  CHECK(t.x0() == 0);
  CHECK(t.y0() == 4);
  CHECK(rect_iou(m, m) == doctest::Approx(1.0));
  CHECK_THROWS_AS(RegionMask(5, 5, 5, 9), std::invalid_argument);
}
