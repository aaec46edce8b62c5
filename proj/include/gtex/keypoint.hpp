#pragma once

#include <optional>
#include <vector>

namespace gtex {

/// Keypoint object: position, region diameter, optional orientation, and
/// detector response. Orientation is in degrees, measured from +x toward +y
/// in raster coordinates, i.e. the direction atan2(gy, gx) of a gradient.
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double size = 1.0;
  std::optional<double> angle;
  double response = 0.0;
  int octave = 0;

  bool operator==(const Keypoint&) const = default;
};

/// Response descending, then (y, x) ascending.
bool keypoint_order(const Keypoint& a, const Keypoint& b);
void sort_keypoints(std::vector<Keypoint>& kps);

}  // namespace gtex
