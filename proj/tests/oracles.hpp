#pragma once

// Slow reference implementations written straight from the definitions.
// Shared by unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <tuple>
#include <vector>

#include "gtex/image.hpp"
#include "gtex/matchpose.hpp"
#include "gtex/metrics.hpp"

namespace gtex::oracle {

inline GrayImage random_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> v(0, 255);
  GrayImage img(w, h);
  for (auto& p : img.data()) p = static_cast<std::uint8_t>(v(rng));
  return img;
}

inline std::int64_t box_sum(const GrayImage& img, int x0, int y0, int x1, int y1) {
  std::int64_t s = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) s += img.at(x, y);
  }
  return s;
}

// Pixel (x, y) is a FAST candidate when some window of `arc` consecutive
// circle pixels (wrapping) is entirely brighter than p + t or entirely darker
// than p - t. Its score sums (excess over t) across every pixel covered by
// such a window, best of the bright and dark polarity. Candidates survive
// when they beat earlier 3x3 neighbors strictly and later ones non-strictly.
inline std::vector<std::tuple<int, int, double>> fast(const GrayImage& img, int t, int arc) {
  const int cx[16] = {0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3, -3, -3, -2, -1};
  const int cy[16] = {-3, -3, -2, -1, 0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3};
  const int w = img.width(), h = img.height();
  std::vector<double> score(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 3; y < h - 3; ++y) {
    for (int x = 3; x < w - 3; ++x) {
      const int p = img.at(x, y);
      double best = 0.0;
      for (int polarity = 0; polarity < 2; ++polarity) {
        bool flag[16];
        int excess[16];
        for (int i = 0; i < 16; ++i) {
          const int v = img.at(x + cx[i], y + cy[i]);
          flag[i] = polarity == 0 ? v > p + t : v < p - t;
          excess[i] = polarity == 0 ? v - p - t : p - v - t;
        }
        bool covered[16] = {};
        for (int s = 0; s < 16; ++s) {
          bool all = true;
          for (int k = 0; k < arc; ++k) all = all && flag[(s + k) % 16];
          if (all) {
            for (int k = 0; k < arc; ++k) covered[(s + k) % 16] = true;
          }
        }
        double sum = 0.0;
        for (int i = 0; i < 16; ++i) {
          if (covered[i]) sum += excess[i];
        }
        best = std::max(best, sum);
      }
      score[static_cast<std::size_t>(y) * w + x] = best;
    }
  }
  std::vector<std::tuple<int, int, double>> out;
  for (int y = 3; y < h - 3; ++y) {
    for (int x = 3; x < w - 3; ++x) {
      const double v = score[static_cast<std::size_t>(y) * w + x];
      if (v <= 0.0) continue;
      bool keep = true;
      for (int dy = -1; dy <= 1 && keep; ++dy) {
        for (int dx = -1; dx <= 1 && keep; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const double n = score[static_cast<std::size_t>(y + dy) * w + x + dx];
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          keep = earlier ? v > n : v >= n;
        }
      }
      if (keep) out.emplace_back(x, y, v);
    }
  }
  return out;
}

// Exhaustive two-smallest search: lowest index wins ties for the nearest.
inline std::vector<Match> ratio_matches(const std::vector<Descriptor>& test, const std::vector<Descriptor>& ref,
                                        double threshold) {
  std::vector<Match> out;
  if (ref.size() < 2) return out;
  for (std::size_t t = 0; t < test.size(); ++t) {
    std::vector<double> d;
    for (const auto& r : ref) d.push_back(descriptor_distance(test[t], r));
    std::size_t best = 0;
    for (std::size_t i = 1; i < d.size(); ++i) {
      if (d[i] < d[best]) best = i;
    }
    double second = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (i != best) second = std::min(second, d[i]);
    }
    if (!(second > 0.0)) continue;
    if (d[best] / second < threshold) {
      out.push_back({static_cast<int>(t), static_cast<int>(best), d[best], d[best] / second});
    }
  }
  return out;
}

// Textbook lens area over the union.
inline double lens_iou(Point2 a, double ra, Point2 b, double rb) {
  const double d = std::hypot(a.x - b.x, a.y - b.y);
  double inter;
  if (d >= ra + rb) return 0.0;
  if (d <= std::abs(ra - rb)) {
    inter = M_PI * std::pow(std::min(ra, rb), 2);
  } else {
    const double alpha = std::acos((d * d + ra * ra - rb * rb) / (2 * d * ra));
    const double beta = std::acos((d * d + rb * rb - ra * ra) / (2 * d * rb));
    inter = ra * ra * (alpha - std::sin(2 * alpha) / 2) + rb * rb * (beta - std::sin(2 * beta) / 2);
  }
  return inter / (M_PI * ra * ra + M_PI * rb * rb - inter);
}

inline double disc_pair_iou(const Keypoint& t, const Keypoint& r, const GroundTruth2D& gt) {
  return lens_iou(gt.apply_inverse({t.x, t.y}), t.size / 2 / gt.scale, {r.x, r.y}, r.size / 2);
}

struct DetectionCounts {
  int considered = 0;
  int matched = 0;
  int links = 0;
};

// All test keypoints against all reference keypoints.
inline DetectionCounts detection(const std::vector<Keypoint>& ref, const std::vector<Keypoint>& test,
                                 const GroundTruth2D& gt, const RegionMask& ref_mask, const RegionMask& test_mask,
                                 double iou_threshold) {
  DetectionCounts c;
  for (const auto& t : test) {
    if (!test_mask.contains(t.x, t.y) || !ref_mask.contains(gt.apply_inverse({t.x, t.y}))) continue;
    ++c.considered;
    int n = 0;
    for (const auto& r : ref) {
      if (!ref_mask.contains(r.x, r.y) || !test_mask.contains(gt.apply({r.x, r.y}))) continue;
      n += disc_pair_iou(t, r, gt) > iou_threshold;
    }
    c.matched += n > 0;
    c.links += n;
  }
  return c;
}

}  // namespace gtex::oracle
