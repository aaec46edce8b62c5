#pragma once

#include <vector>

#include "gtex/detect.hpp"

namespace gtex::detail {

// Dense score map with strict 3x3 non-maximum test. Equal neighbors are
// resolved in raster order: a pixel must beat earlier neighbors strictly and
// later ones non-strictly.
inline bool is_local_max_3x3(const std::vector<double>& score, int w, int x, int y) {
  const double v = score[static_cast<std::size_t>(y) * w + x];
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const double n = score[static_cast<std::size_t>(y + dy) * w + (x + dx)];
      const bool earlier = dy < 0 || (dy == 0 && dx < 0);
      if (earlier ? !(v > n) : !(v >= n)) return false;
    }
  }
  return true;
}

inline bool in_mask(const DetectorConfig& cfg, double x, double y) {
  return !cfg.mask || cfg.mask->contains(x, y);
}

}  // namespace gtex::detail
