#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtex/image.hpp"
#include "gtex/keypoint.hpp"
#include "gtex/synth.hpp"

namespace gtex {

struct CornerParams {
  double sigma_w = 2.0;  // structure-tensor window
  double harris_k = 0.04;
  // Thresholds apply to responses computed from gradients of the image
  // scaled to [0, 1].
  double harris_threshold = 1e-6;
  double min_eigen_threshold = 1e-4;
};

struct FastParams {
  int threshold = 20;
  int arc = 9;
};

struct CensureParams {
  int n_scales = 7;
  double response_threshold = 6.0;  // intensity units
  double line_threshold = 10.0;
};

struct DogParams {
  int octaves = 4;
  int intervals = 3;
  double sigma0 = 1.6;
  double assumed_blur = 0.5;
  double contrast_threshold = 0.03;  // fraction of the intensity range
  double edge_ratio = 10.0;
  int max_refine_steps = 3;
  bool orientation = true;
};

struct DetectorConfig {
  CornerParams corners;
  FastParams fast;
  CensureParams censure;
  DogParams dog;
  /// Keypoints whose center is outside the mask are never emitted.
  std::optional<RegionMask> mask;

  void validate() const;
};

class DetectorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class CornerResponse { kHarris, kMinEigenvalue };

std::vector<Keypoint> detect_corners(const GrayImage& img, const DetectorConfig& cfg, CornerResponse kind);
std::vector<Keypoint> detect_fast(const GrayImage& img, const DetectorConfig& cfg);
std::vector<Keypoint> detect_censure(const GrayImage& img, const DetectorConfig& cfg);
std::vector<Keypoint> detect_dog(const GrayImage& img, const DetectorConfig& cfg);

/// Bi-level center-surround response at (x, y) for scale n (inner box side
/// 2n+1, outer 4n+1). Zero on constant images.
double censure_response(const IntegralImage& ii, int x, int y, int n);

/// Orientation histogram peaks for a keypoint on its scale-space level.
/// Position and scale are read from kp (base-image frame, octave kp.octave,
/// size = 3 sigma). Returns one keypoint per peak >= 80% of the maximum, or
/// nothing when the window leaves the level image.
std::vector<Keypoint> assign_orientation(const FloatImage& level, const Keypoint& kp);

const std::vector<std::string>& detector_names();
bool is_detector_name(const std::string& name);
/// Whether the named detector assigns orientations.
bool detector_assigns_orientation(const std::string& name);
std::vector<Keypoint> detect(const std::string& name, const GrayImage& img, const DetectorConfig& cfg);

}  // namespace gtex
