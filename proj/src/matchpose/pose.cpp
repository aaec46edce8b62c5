#include <cmath>
#include <limits>

#include "gtex/matchpose.hpp"

namespace gtex {

Pose2D estimate_euclidean_lsq(const std::vector<std::pair<Point2, Point2>>& pairs, bool with_scale) {
  if (pairs.size() < 2) throw PoseError("estimate_euclidean_lsq: need at least two pairs");
  const double n = static_cast<double>(pairs.size());
  Point2 ma{0, 0}, mb{0, 0};
  for (const auto& [a, b] : pairs) {
    ma.x += a.x;
    ma.y += a.y;
    mb.x += b.x;
    mb.y += b.y;
  }
  ma = {ma.x / n, ma.y / n};
  mb = {mb.x / n, mb.y / n};

  double dot = 0.0, cross = 0.0, var_a = 0.0;
  for (const auto& [a, b] : pairs) {
    const double ax = a.x - ma.x, ay = a.y - ma.y;
    const double bx = b.x - mb.x, by = b.y - mb.y;
    dot += ax * bx + ay * by;
    cross += ax * by - ay * bx;
    var_a += ax * ax + ay * ay;
  }
  if (!(var_a > 0.0)) throw PoseError("estimate_euclidean_lsq: source points coincide");

  const double theta = std::atan2(cross, dot);
  const double s = with_scale ? std::hypot(dot, cross) / var_a : 1.0;
  if (!(s > 0.0)) throw PoseError("estimate_euclidean_lsq: degenerate correspondence");
  const double c = std::cos(theta), sn = std::sin(theta);
  Pose2D pose;
  pose.angle = rad2deg(theta);
  pose.scale = s;
  pose.tx = mb.x - s * (c * ma.x - sn * ma.y);
  pose.ty = mb.y - s * (sn * ma.x + c * ma.y);
  return pose;
}

double pose_residual(const Pose2D& pose, const std::vector<std::pair<Point2, Point2>>& pairs) {
  double sum = 0.0;
  for (const auto& [a, b] : pairs) {
    const Point2 p = pose.apply(a);
    sum += (p.x - b.x) * (p.x - b.x) + (p.y - b.y) * (p.y - b.y);
  }
  return sum;
}

void RansacConfig::validate() const {
  if (iterations < 1) throw PoseError("RANSAC iterations must be >= 1");
  if (!(inlier_threshold > 0.0)) throw PoseError("RANSAC inlier threshold must be positive");
  if (min_inliers < 2) throw PoseError("RANSAC min_inliers must be >= 2");
  if (!(scale_min > 0.0) || !(scale_min <= 1.0) || !(scale_max >= 1.0)) {
    throw PoseError("RANSAC scale bounds must contain 1");
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Consensus {
  std::vector<int> members;
  double error_sum = 0.0;
};

Consensus score(const Pose2D& pose, const std::vector<std::pair<Point2, Point2>>& pts, double threshold) {
  Consensus c;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point2 p = pose.apply(pts[i].first);
    const double e = std::hypot(p.x - pts[i].second.x, p.y - pts[i].second.y);
    if (e < threshold) {
      c.members.push_back(static_cast<int>(i));
      c.error_sum += e;
    }
  }
  return c;
}

bool better(const Consensus& a, const Consensus& b) {
  if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
  if (a.members.empty()) return false;
  return a.error_sum / a.members.size() < b.error_sum / b.members.size();
}

}  // namespace

std::optional<RansacResult> ransac_pose(const std::vector<Match>& matches, const std::vector<Keypoint>& test_kps,
                                        const std::vector<Keypoint>& ref_kps, const RansacConfig& cfg) {
  cfg.validate();
  if (matches.size() < 2) return std::nullopt;
  std::vector<std::pair<Point2, Point2>> pts;
  pts.reserve(matches.size());
  for (const Match& m : matches) {
    if (m.test_index < 0 || m.ref_index < 0 || m.test_index >= static_cast<int>(test_kps.size()) ||
        m.ref_index >= static_cast<int>(ref_kps.size())) {
      throw PoseError("ransac_pose: match index out of range");
    }
    const Keypoint& t = test_kps[m.test_index];
    const Keypoint& r = ref_kps[m.ref_index];
    pts.push_back({{t.x, t.y}, {r.x, r.y}});
  }
  auto in_bounds = [&](const Pose2D& p) { return p.scale >= cfg.scale_min && p.scale <= cfg.scale_max; };

  const std::uint64_t n = pts.size();
  Consensus best;
  for (int it = 0; it < cfg.iterations; ++it) {
    // Each iteration draws from its own stream so the result does not depend
    // on evaluation order.
    const std::uint64_t h = splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(it)));
    const std::uint64_t i = h % n;
    std::uint64_t j = splitmix64(h) % (n - 1);
    if (j >= i) ++j;
    Pose2D candidate;
    try {
      candidate = estimate_euclidean_lsq({pts[i], pts[j]}, cfg.with_scale);
    } catch (const PoseError&) {
      continue;
    }
    if (!in_bounds(candidate)) continue;
    Consensus c = score(candidate, pts, cfg.inlier_threshold);
    if (better(c, best)) best = std::move(c);
  }
  if (static_cast<int>(best.members.size()) < cfg.min_inliers) return std::nullopt;

  std::vector<std::pair<Point2, Point2>> inlier_pts;
  inlier_pts.reserve(best.members.size());
  for (int k : best.members) inlier_pts.push_back(pts[k]);
  Pose2D refined;
  try {
    refined = estimate_euclidean_lsq(inlier_pts, cfg.with_scale);
  } catch (const PoseError&) {
    return std::nullopt;
  }
  if (!in_bounds(refined)) return std::nullopt;
  const Consensus final_set = score(refined, pts, cfg.inlier_threshold);
  if (static_cast<int>(final_set.members.size()) < cfg.min_inliers) return std::nullopt;

  RansacResult result;
  result.pose = refined;
  result.mean_error = final_set.error_sum / static_cast<double>(final_set.members.size());
  for (int k : final_set.members) result.inliers.push_back(matches[k]);
  return result;
}

}  // namespace gtex
