#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "gtex/describe.hpp"
#include "gtex/geometry.hpp"

namespace gtex {

namespace {

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

// Rotates integer pattern offsets about a rounded keypoint anchor and reads
// the smoothed image by nearest pixel. Reports failure instead of clamping so
// that callers can drop keypoints near the border.
class PatchSampler {
 public:
  PatchSampler(const FloatImage& smooth, const Keypoint& kp, bool steer)
      : img_(smooth), ax_(round_half_up(kp.x)), ay_(round_half_up(kp.y)) {
    if (steer && kp.angle) {
      rotate_ = true;
      c_ = std::cos(deg2rad(*kp.angle));
      s_ = std::sin(deg2rad(*kp.angle));
    }
  }

  bool read(int ox, int oy, double& out) const {
    int x = ax_ + ox;
    int y = ay_ + oy;
    if (rotate_) {
      x = ax_ + round_half_up(c_ * ox - s_ * oy);
      y = ay_ + round_half_up(s_ * ox + c_ * oy);
    }
    if (x < 0 || y < 0 || x >= img_.width() || y >= img_.height()) return false;
    out = img_.at(x, y);
    return true;
  }

 private:
  const FloatImage& img_;
  int ax_;
  int ay_;
  bool rotate_ = false;
  double c_ = 1.0;
  double s_ = 0.0;
};

}  // namespace

BriefPattern brief_pattern(std::uint64_t seed) {
  BriefPattern pattern;
  pattern.seed = seed;
  std::mt19937_64 rng(seed);
  const double sigma = (2.0 * kBriefHalfWidth + 1.0) / 5.0;
  std::normal_distribution<double> normal(0.0, sigma);
  auto draw = [&] {
    const int v = round_half_up(normal(rng));
    return std::clamp(v, -kBriefHalfWidth, kBriefHalfWidth);
  };
  while (pattern.pairs.size() < static_cast<std::size_t>(kBinaryBits)) {
    Offset a{draw(), draw()};
    Offset b{draw(), draw()};
    if (a == b) continue;
    pattern.pairs.push_back({a, b});
  }
  return pattern;
}

LatchPattern latch_pattern(std::uint64_t seed, int window, int patch) {
  if (patch < 1 || patch % 2 == 0 || window < patch + 2) {
    throw DescriptorError("latch_pattern: patch must be odd and smaller than the window");
  }
  LatchPattern pattern;
  pattern.seed = seed;
  pattern.window = window;
  pattern.patch = patch;
  const int half_patch = patch / 2;
  const int lo = -window / 2 + half_patch;
  const int hi = (window - 1) / 2 - half_patch;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coord(lo, hi);
  while (pattern.triplets.size() < static_cast<std::size_t>(kBinaryBits)) {
    Offset a{coord(rng), coord(rng)};
    Offset p1{coord(rng), coord(rng)};
    Offset p2{coord(rng), coord(rng)};
    if (a == p1 || a == p2 || p1 == p2) continue;
    pattern.triplets.push_back({a, p1, p2});
  }
  return pattern;
}

std::vector<Feature> describe_brief(const GrayImage& img, const std::vector<Keypoint>& kps, const BriefPattern& pattern,
                                    bool steered, double smoothing_sigma) {
  std::vector<Feature> out;
  if (kps.empty()) return out;
  const FloatImage smooth = gaussian_blur(img, smoothing_sigma);
  out.reserve(kps.size());
  for (const Keypoint& kp : kps) {
    PatchSampler sampler(smooth, kp, steered);
    Descriptor d;
    d.kind = DescriptorKind::kBinary;
    bool inside = true;
    for (std::size_t i = 0; i < pattern.pairs.size() && inside; ++i) {
      double v1 = 0.0, v2 = 0.0;
      const auto& [p, q] = pattern.pairs[i];
      inside = sampler.read(p.x, p.y, v1) && sampler.read(q.x, q.y, v2);
      if (inside && v1 < v2) d.set_bit(static_cast<int>(i));
    }
    if (inside) out.push_back({kp, d});
  }
  return out;
}

std::vector<Feature> describe_latch(const GrayImage& img, const std::vector<Keypoint>& kps,
                                    const LatchPattern& pattern, double smoothing_sigma) {
  std::vector<Feature> out;
  if (kps.empty()) return out;
  const FloatImage smooth = gaussian_blur(img, smoothing_sigma);
  const int hp = pattern.patch / 2;
  // Every triplet patch lies inside the window, so the steered window is
  // sampled once per keypoint and patches are read from that buffer.
  const int lo = -pattern.window / 2;
  const int side = pattern.window;
  std::vector<double> win(static_cast<std::size_t>(side) * side);
  std::vector<std::uint8_t> ok(win.size());
  out.reserve(kps.size());

  for (const Keypoint& kp : kps) {
    PatchSampler sampler(smooth, kp, true);
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        const std::size_t k = static_cast<std::size_t>(y) * side + x;
        ok[k] = sampler.read(lo + x, lo + y, win[k]);
      }
    }
    auto ssd = [&](Offset a, Offset b, double& out_ssd) {
      double sum = 0.0;
      for (int dy = -hp; dy <= hp; ++dy) {
        const std::size_t ra = static_cast<std::size_t>(a.y + dy - lo) * side;
        const std::size_t rb = static_cast<std::size_t>(b.y + dy - lo) * side;
        for (int dx = -hp; dx <= hp; ++dx) {
          const std::size_t ia = ra + (a.x + dx - lo);
          const std::size_t ib = rb + (b.x + dx - lo);
          if (!ok[ia] || !ok[ib]) return false;
          const double d = win[ia] - win[ib];
          sum += d * d;
        }
      }
      out_ssd = sum;
      return true;
    };
    Descriptor d;
    d.kind = DescriptorKind::kBinary;
    bool inside = true;
    for (std::size_t i = 0; i < pattern.triplets.size() && inside; ++i) {
      const auto& t = pattern.triplets[i];
      double ssd1 = 0.0, ssd2 = 0.0;
      inside = ssd(t[0], t[1], ssd1) && ssd(t[0], t[2], ssd2);
      if (inside && ssd1 < ssd2) d.set_bit(static_cast<int>(i));
    }
    if (inside) out.push_back({kp, d});
  }
  return out;
}

}  // namespace gtex
