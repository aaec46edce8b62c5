#include "gtex/keypoint.hpp"

#include <algorithm>

namespace gtex {

bool keypoint_order(const Keypoint& a, const Keypoint& b) {
  if (a.response != b.response) return a.response > b.response;
  if (a.y != b.y) return a.y < b.y;
  return a.x < b.x;
}

void sort_keypoints(std::vector<Keypoint>& kps) { std::stable_sort(kps.begin(), kps.end(), keypoint_order); }

}  // namespace gtex
