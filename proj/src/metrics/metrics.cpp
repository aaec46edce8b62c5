#include "gtex/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace gtex {

void MetricsConfig::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw MetricsError("IoU threshold must lie in (0, 1]");
  if (n_min_keypoints < 1) throw MetricsError("n_min_keypoints must be >= 1");
  if (!(pos_threshold > 0.0) || !(ang_threshold > 0.0)) throw MetricsError("pose thresholds must be positive");
  if (!(pixels_per_mm > 0.0)) throw MetricsError("pixels_per_mm must be positive");
}

double disc_iou(Point2 a, double ra, Point2 b, double rb) {
  if (!(ra > 0.0) || !(rb > 0.0)) return 0.0;
  const double d = distance(a, b);
  const double area_a = M_PI * ra * ra;
  const double area_b = M_PI * rb * rb;
  double inter = 0.0;
  if (d >= ra + rb) {
    return 0.0;
  } else if (d <= std::abs(ra - rb)) {
    inter = std::min(area_a, area_b);
  } else {
    const double ca = std::clamp((d * d + ra * ra - rb * rb) / (2.0 * d * ra), -1.0, 1.0);
    const double cb = std::clamp((d * d + rb * rb - ra * ra) / (2.0 * d * rb), -1.0, 1.0);
    const double k = std::max(0.0, (-d + ra + rb) * (d + ra - rb) * (d - ra + rb) * (d + ra + rb));
    inter = ra * ra * std::acos(ca) + rb * rb * std::acos(cb) - 0.5 * std::sqrt(k);
  }
  return std::clamp(inter / (area_a + area_b - inter), 0.0, 1.0);
}

namespace {

struct Disc {
  Point2 c;
  double r;
};

Disc mapped_test_disc(const Keypoint& kp, const GroundTruth2D& gt) {
  return {gt.apply_inverse({kp.x, kp.y}), 0.5 * kp.size / gt.scale};
}

}  // namespace

double keypoint_iou(const Keypoint& test_kp, const Keypoint& ref_kp, const GroundTruth2D& gt) {
  const Disc t = mapped_test_disc(test_kp, gt);
  return disc_iou(t.c, t.r, {ref_kp.x, ref_kp.y}, 0.5 * ref_kp.size);
}

DetectionScore repeatability_and_ambiguity(const std::vector<Keypoint>& ref_kps, const std::vector<Keypoint>& test_kps,
                                           const GroundTruth2D& gt, const RegionMask& ref_mask,
                                           const RegionMask& test_mask, const MetricsConfig& cfg) {
  DetectionScore score;
  score.n_ref_kps = static_cast<int>(ref_kps.size());
  score.n_test_kps = static_cast<int>(test_kps.size());
  score.below_n = score.n_test_kps < cfg.n_min_keypoints;

  std::vector<Disc> refs;
  double max_r = 0.0;
  for (const Keypoint& r : ref_kps) {
    const Point2 p{r.x, r.y};
    if (!ref_mask.contains(p) || !test_mask.contains(gt.apply(p))) continue;
    refs.push_back({p, 0.5 * r.size});
    max_r = std::max(max_r, 0.5 * r.size);
  }
  std::sort(refs.begin(), refs.end(), [](const Disc& a, const Disc& b) { return a.c.x < b.c.x; });

  int matched = 0;
  long total_matches = 0;
  for (const Keypoint& t : test_kps) {
    if (!test_mask.contains(t.x, t.y)) continue;
    const Disc d = mapped_test_disc(t, gt);
    if (!ref_mask.contains(d.c)) continue;
    ++score.n_considered;
    // Discs farther apart than the sum of radii have zero overlap.
    const double reach = d.r + max_r;
    auto it = std::lower_bound(refs.begin(), refs.end(), d.c.x - reach,
                               [](const Disc& a, double x) { return a.c.x < x; });
    int count = 0;
    for (; it != refs.end() && it->c.x <= d.c.x + reach; ++it) {
      if (disc_iou(d.c, d.r, it->c, it->r) > cfg.iou_threshold) ++count;
    }
    if (count > 0) {
      ++matched;
      total_matches += count;
    }
  }
  if (score.n_considered > 0) score.repeatability = static_cast<double>(matched) / score.n_considered;
  if (matched > 0) score.ambiguity = static_cast<double>(total_matches) / matched;
  return score;
}

MatchScore match_correctness(const std::vector<Match>& matches, const std::vector<Keypoint>& test_kps,
                             const std::vector<Keypoint>& ref_kps, const GroundTruth2D& gt, const MetricsConfig& cfg) {
  MatchScore score;
  score.n_matches = static_cast<int>(matches.size());
  for (const Match& m : matches) {
    if (m.test_index < 0 || m.ref_index < 0 || m.test_index >= static_cast<int>(test_kps.size()) ||
        m.ref_index >= static_cast<int>(ref_kps.size())) {
      throw MetricsError("match_correctness: match index out of range");
    }
    if (keypoint_iou(test_kps[m.test_index], ref_kps[m.ref_index], gt) > cfg.iou_threshold) ++score.n_correct;
  }
  if (score.n_matches > 0) score.precision = static_cast<double>(score.n_correct) / score.n_matches;
  return score;
}

bool pose_success(const std::optional<Pose2D>& est, const GroundTruth2D& gt, const MetricsConfig& cfg) {
  if (!est) return false;
  const Pose2D truth = gt.test_to_reference();
  const Point2 center{gt.cx, gt.cy};
  const double displacement = distance(est->apply(center), truth.apply(center));
  const double angle_error = std::abs(wrap_angle_deg(est->angle - truth.angle));
  return displacement < cfg.pos_threshold && angle_error < cfg.ang_threshold;
}

double success_rate(const std::vector<bool>& flags) {
  if (flags.empty()) throw MetricsError("success_rate: no pose estimates");
  const auto hits = std::count(flags.begin(), flags.end(), true);
  return static_cast<double>(hits) / static_cast<double>(flags.size());
}

}  // namespace gtex
