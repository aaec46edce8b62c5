#include <array>

#include "gtex/detect.hpp"
#include "internal.hpp"

namespace gtex {

namespace {

// Bresenham circle of radius 3, clockwise from 12 o'clock. Indices 0, 4, 8,
// 12 are the compass pixels.
constexpr std::array<std::array<int, 2>, 16> kCircle{{{0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1},
                                                      {2, 2},  {1, 3},  {0, 3},  {-1, 3}, {-2, 2}, {-3, 1},
                                                      {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}}};

// Sum of (excess) over circle pixels that belong to a contiguous run of at
// least `arc` flagged pixels. Zero when no run qualifies.
double qualifying_arc_sum(const std::array<bool, 16>& flag, const std::array<int, 16>& excess, int arc) {
  int start = -1;
  for (int i = 0; i < 16; ++i) {
    if (!flag[i]) {
      start = i;
      break;
    }
  }
  if (start < 0) {
    if (arc > 16) return 0.0;
    double sum = 0.0;
    for (int v : excess) sum += v;
    return sum;
  }
  double total = 0.0;
  int run = 0;
  double run_sum = 0.0;
  // Walk one full turn starting after a non-flagged pixel so no run wraps.
  for (int k = 1; k <= 16; ++k) {
    const int i = (start + k) % 16;
    if (flag[i]) {
      ++run;
      run_sum += excess[i];
    } else {
      if (run >= arc) total += run_sum;
      run = 0;
      run_sum = 0.0;
    }
  }
  return total;
}

}  // namespace

std::vector<Keypoint> detect_fast(const GrayImage& img, const DetectorConfig& cfg) {
  const int w = img.width();
  const int h = img.height();
  if (w < 7 || h < 7) throw DetectorError("detect_fast: image must be at least 7x7");
  const int t = cfg.fast.threshold;
  const int arc = cfg.fast.arc;
  // Any run of `arc` pixels covers at least arc/4 compass pixels.
  const int min_compass = arc / 4;

  std::vector<double> score(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 3; y < h - 3; ++y) {
    for (int x = 3; x < w - 3; ++x) {
      const int p = img.at(x, y);
      int bright_compass = 0;
      int dark_compass = 0;
      for (int c = 0; c < 16; c += 4) {
        const int v = img.at(x + kCircle[c][0], y + kCircle[c][1]);
        bright_compass += v > p + t;
        dark_compass += v < p - t;
      }
      if (bright_compass < min_compass && dark_compass < min_compass) continue;

      std::array<bool, 16> bright{}, dark{};
      std::array<int, 16> bright_excess{}, dark_excess{};
      for (int i = 0; i < 16; ++i) {
        const int v = img.at(x + kCircle[i][0], y + kCircle[i][1]);
        bright[i] = v > p + t;
        dark[i] = v < p - t;
        bright_excess[i] = v - p - t;
        dark_excess[i] = p - v - t;
      }
      double s = 0.0;
      if (bright_compass >= min_compass) s = qualifying_arc_sum(bright, bright_excess, arc);
      if (dark_compass >= min_compass) s = std::max(s, qualifying_arc_sum(dark, dark_excess, arc));
      score[static_cast<std::size_t>(y) * w + x] = s;
    }
  }

  std::vector<Keypoint> kps;
  for (int y = 3; y < h - 3; ++y) {
    for (int x = 3; x < w - 3; ++x) {
      const double v = score[static_cast<std::size_t>(y) * w + x];
      if (v <= 0.0) continue;
      if (!detail::in_mask(cfg, x, y)) continue;
      if (!detail::is_local_max_3x3(score, w, x, y)) continue;
      Keypoint kp;
      kp.x = x;
      kp.y = y;
      kp.size = 7.0;
      kp.response = v;
      kps.push_back(kp);
    }
  }
  sort_keypoints(kps);
  return kps;
}

}  // namespace gtex
