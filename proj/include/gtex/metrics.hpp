#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "gtex/geometry.hpp"
#include "gtex/keypoint.hpp"
#include "gtex/matchpose.hpp"
#include "gtex/synth.hpp"

namespace gtex {

struct MetricsConfig {
  double iou_threshold = 0.5;
  int n_min_keypoints = 100;
  double pos_threshold = 30.0;
  double ang_threshold = 1.5;
  /// Dataset calibration, reported only (30 px correspond to 4.8 mm).
  double pixels_per_mm = 6.25;

  void validate() const;
};

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// IoU of two discs given centers and radii.
double disc_iou(Point2 a, double ra, Point2 b, double rb);

/// The test keypoint's disc is mapped into the reference image (center by
/// the inverse ground truth, diameter divided by its scale) and compared to
/// the reference keypoint's disc.
double keypoint_iou(const Keypoint& test_kp, const Keypoint& ref_kp, const GroundTruth2D& gt);

struct DetectionScore {
  std::optional<double> repeatability;
  std::optional<double> ambiguity;
  bool below_n = false;
  int n_test_kps = 0;
  int n_ref_kps = 0;
  int n_considered = 0;
};

/// ref_mask is expressed in reference coordinates and test_mask in test
/// coordinates. A keypoint is considered when it lies in its own image's mask
/// and its ground-truth image lies in the other mask.
DetectionScore repeatability_and_ambiguity(const std::vector<Keypoint>& ref_kps, const std::vector<Keypoint>& test_kps,
                                           const GroundTruth2D& gt, const RegionMask& ref_mask,
                                           const RegionMask& test_mask, const MetricsConfig& cfg);

struct MatchScore {
  int n_matches = 0;
  int n_correct = 0;
  std::optional<double> precision;
};

MatchScore match_correctness(const std::vector<Match>& matches, const std::vector<Keypoint>& test_kps,
                             const std::vector<Keypoint>& ref_kps, const GroundTruth2D& gt, const MetricsConfig& cfg);

/// est maps test coordinates to reference coordinates. Position error is
/// the distance between the images of the test image center under est and
/// under the ground truth.
bool pose_success(const std::optional<Pose2D>& est, const GroundTruth2D& gt, const MetricsConfig& cfg);

double success_rate(const std::vector<bool>& flags);

}  // namespace gtex
