#pragma once

#include <cmath>

namespace gtex {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline double deg2rad(double deg) { return deg * M_PI / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / M_PI; }

/// Wraps an angle difference to (-180, 180].
double wrap_angle_deg(double deg);
/// Wraps an angle to [0, 360).
double normalize_angle_deg(double deg);

/// Planar similarity p' = scale * R(angle) * p + (tx, ty), with
/// R(a) = [[cos a, -sin a], [sin a, cos a]] applied to raster coordinates
/// (x right, y down). Angle in degrees.
struct Pose2D {
  double angle = 0.0;
  double tx = 0.0;
  double ty = 0.0;
  double scale = 1.0;

  Point2 apply(Point2 p) const;
  Pose2D inverse() const;
  /// (*this) after `first`: p -> this(first(p)).
  Pose2D compose(const Pose2D& first) const;
};

inline Point2 apply_pose(const Pose2D& pose, Point2 p) { return pose.apply(p); }

/// Synthetic ground truth mapping reference-image points to test-image points:
///   p' = scale * M(angle) * (p - c) + c + (tx, ty)
/// where c = (cx, cy) is the image center and M(angle) rotates image content
/// counter-clockwise as displayed on a y-down raster, i.e.
/// M(a) = [[cos a, sin a], [-sin a, cos a]]. This is the convention of
/// warp_rotate, so M(angle) equals Pose2D's R(-angle).
struct GroundTruth2D {
  double angle = 0.0;
  double tx = 0.0;
  double ty = 0.0;
  double scale = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  static GroundTruth2D identity(int width, int height);

  Point2 apply(Point2 p) const;
  Point2 apply_inverse(Point2 p) const;
  /// Reference -> test map expressed as a Pose2D.
  Pose2D to_pose() const;
  /// Test -> reference map, the quantity a localizer estimates.
  Pose2D test_to_reference() const { return to_pose().inverse(); }
};

}  // namespace gtex
