#include <algorithm>

#include "gtex/detect.hpp"

namespace gtex {

void DetectorConfig::validate() const {
  if (!(corners.sigma_w > 0.0) || !(corners.harris_threshold > 0.0) || !(corners.min_eigen_threshold > 0.0)) {
    throw DetectorError("corner detector parameters must be positive");
  }
  if (fast.threshold <= 0 || fast.arc < 1 || fast.arc > 16) throw DetectorError("FAST threshold/arc out of range");
  if (censure.n_scales < 1 || !(censure.response_threshold > 0.0) || !(censure.line_threshold > 0.0)) {
    throw DetectorError("CenSurE parameters out of range");
  }
  if (dog.octaves < 1 || dog.intervals < 1 || !(dog.contrast_threshold > 0.0) || !(dog.edge_ratio > 0.0) ||
      !(dog.sigma0 > 0.0) || dog.max_refine_steps < 1) {
    throw DetectorError("DoG parameters out of range");
  }
}

const std::vector<std::string>& detector_names() {
  static const std::vector<std::string> names{"harris", "gftt", "fast", "censure", "dog"};
  return names;
}

bool is_detector_name(const std::string& name) {
  const auto& n = detector_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

bool detector_assigns_orientation(const std::string& name) { return name == "dog"; }

std::vector<Keypoint> detect(const std::string& name, const GrayImage& img, const DetectorConfig& cfg) {
  if (name == "harris") return detect_corners(img, cfg, CornerResponse::kHarris);
  if (name == "gftt") return detect_corners(img, cfg, CornerResponse::kMinEigenvalue);
  if (name == "fast") return detect_fast(img, cfg);
  if (name == "censure") return detect_censure(img, cfg);
  if (name == "dog") return detect_dog(img, cfg);
  throw DetectorError("unknown detector '" + name + "'");
}

}  // namespace gtex
