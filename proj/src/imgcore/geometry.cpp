#include "gtex/geometry.hpp"

namespace gtex {

double wrap_angle_deg(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r <= -180.0) r += 360.0;
  if (r > 180.0) r -= 360.0;
  return r;
}

double normalize_angle_deg(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r -= 360.0;
  return r;
}

Point2 Pose2D::apply(Point2 p) const {
  const double a = deg2rad(angle);
  const double c = std::cos(a);
  const double s = std::sin(a);
  return {scale * (c * p.x - s * p.y) + tx, scale * (s * p.x + c * p.y) + ty};
}

Pose2D Pose2D::inverse() const {
  const double a = deg2rad(-angle);
  const double c = std::cos(a);
  const double s = std::sin(a);
  const double inv_s = 1.0 / scale;
  return {-angle, -inv_s * (c * tx - s * ty), -inv_s * (s * tx + c * ty), inv_s};
}

Pose2D Pose2D::compose(const Pose2D& first) const {
  const Point2 t = apply({first.tx, first.ty});
  return {angle + first.angle, t.x, t.y, scale * first.scale};
}

GroundTruth2D GroundTruth2D::identity(int width, int height) {
  GroundTruth2D gt;
  gt.cx = 0.5 * (width - 1);
  gt.cy = 0.5 * (height - 1);
  return gt;
}

Point2 GroundTruth2D::apply(Point2 p) const {
  const double a = deg2rad(angle);
  const double c = std::cos(a);
  const double s = std::sin(a);
  const double dx = p.x - cx;
  const double dy = p.y - cy;
  return {scale * (c * dx + s * dy) + cx + tx, scale * (-s * dx + c * dy) + cy + ty};
}

Point2 GroundTruth2D::apply_inverse(Point2 p) const {
  const double a = deg2rad(angle);
  const double c = std::cos(a);
  const double s = std::sin(a);
  const double dx = (p.x - cx - tx) / scale;
  const double dy = (p.y - cy - ty) / scale;
  return {c * dx - s * dy + cx, s * dx + c * dy + cy};
}

Pose2D GroundTruth2D::to_pose() const {
  Pose2D pose{-angle, 0.0, 0.0, scale};
  const Point2 rc = pose.apply({cx, cy});
  pose.tx = cx + tx - rc.x;
  pose.ty = cy + ty - rc.y;
  return pose;
}

}  // namespace gtex
