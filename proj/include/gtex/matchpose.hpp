#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gtex/describe.hpp"
#include "gtex/geometry.hpp"
#include "gtex/keypoint.hpp"

namespace gtex {

struct Match {
  int test_index = 0;
  int ref_index = 0;
  double distance = 0.0;
  double ratio = 0.0;
  bool operator==(const Match&) const = default;
};

class MatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hamming distance for binary descriptors, L2 for real ones.
double descriptor_distance(const Descriptor& a, const Descriptor& b);

/// For each test descriptor, finds the two nearest reference descriptors by
/// linear scan (ties keep the lowest index) and emits a match when
/// d1 / d2 < ratio_threshold. d2 == 0 or fewer than two references emit none.
std::vector<Match> match_ratio_test(const std::vector<Descriptor>& test, const std::vector<Descriptor>& ref,
                                    double ratio_threshold = 0.7);

class PoseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least-squares similarity (or rigid, when !with_scale) transform taking
/// first -> second in each pair. Throws PoseError when degenerate.
Pose2D estimate_euclidean_lsq(const std::vector<std::pair<Point2, Point2>>& pairs, bool with_scale);

/// Sum of squared residuals of pose on pairs.
double pose_residual(const Pose2D& pose, const std::vector<std::pair<Point2, Point2>>& pairs);

struct RansacConfig {
  int iterations = 2000;
  double inlier_threshold = 3.0;
  bool with_scale = true;
  std::uint64_t seed = 1;
  int min_inliers = 5;
  double scale_min = 0.9;
  double scale_max = 1.1;

  void validate() const;
};

struct RansacResult {
  /// Maps test keypoint coordinates into the reference image.
  Pose2D pose;
  std::vector<Match> inliers;
  double mean_error = 0.0;
};

/// Two-point RANSAC over matches; the error of a match is the distance in
/// the reference image between pose(test keypoint) and its reference
/// keypoint. nullopt stands for "no pose".
std::optional<RansacResult> ransac_pose(const std::vector<Match>& matches, const std::vector<Keypoint>& test_kps,
                                        const std::vector<Keypoint>& ref_kps, const RansacConfig& cfg);

}  // namespace gtex
