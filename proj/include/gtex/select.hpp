#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gtex/keypoint.hpp"

namespace gtex {

enum class SelectMethod { kNms, kSsc, kBucketing };

std::string to_string(SelectMethod method);
std::optional<SelectMethod> select_method_from_string(const std::string& name);

struct SelectorConfig {
  SelectMethod method = SelectMethod::kNms;
  int n_target = 1000;
  double ssc_tolerance = 0.20;
  int grid_rows = 8;
  int grid_cols = 6;
  int per_cell = 21;

  void validate() const;
};

/// The n keypoints of largest response, ordered by keypoint_order.
std::vector<Keypoint> select_nms(const std::vector<Keypoint>& kps, int n);

struct SscResult {
  std::vector<Keypoint> keypoints;
  /// Suppression half-width of the returned set (L-infinity).
  double radius = 0.0;
  /// False when no radius produced a count inside [n, n * (1 + tolerance)].
  bool converged = true;
};

/// Suppression via square covering: bisects the suppression radius until a
/// greedy, response-ordered pass keeps between n and n * (1 + tolerance)
/// keypoints.
SscResult select_ssc(const std::vector<Keypoint>& kps, int n, double tolerance, int width, int height);

/// Per-cell NMS on a rows x cols grid; the last row/column absorb remainders.
std::vector<Keypoint> select_bucketing(const std::vector<Keypoint>& kps, int rows, int cols, int per_cell, int width,
                                       int height);

std::vector<Keypoint> select(const std::vector<Keypoint>& kps, const SelectorConfig& cfg, int width, int height);

}  // namespace gtex
