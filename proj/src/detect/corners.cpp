#include <cmath>

#include "gtex/detect.hpp"
#include "internal.hpp"

namespace gtex {

std::vector<Keypoint> detect_corners(const GrayImage& img, const DetectorConfig& cfg, CornerResponse kind) {
  if (img.width() < 7 || img.height() < 7) throw DetectorError("detect_corners: image must be at least 7x7");
  const CornerParams& p = cfg.corners;
  const int w = img.width();
  const int h = img.height();

  const Gradients g = gradients(FloatImage::from_gray(img, 1.0 / 255.0));
  FloatImage ixx(w, h), ixy(w, h), iyy(w, h);
  for (std::size_t i = 0; i < ixx.data().size(); ++i) {
    const double gx = g.gx.data()[i] / 8.0;
    const double gy = g.gy.data()[i] / 8.0;
    ixx.data()[i] = gx * gx;
    ixy.data()[i] = gx * gy;
    iyy.data()[i] = gy * gy;
  }
  ixx = gaussian_blur(ixx, p.sigma_w);
  ixy = gaussian_blur(ixy, p.sigma_w);
  iyy = gaussian_blur(iyy, p.sigma_w);

  const double threshold = kind == CornerResponse::kHarris ? p.harris_threshold : p.min_eigen_threshold;
  std::vector<double> score(static_cast<std::size_t>(w) * h, 0.0);
  for (std::size_t i = 0; i < score.size(); ++i) {
    const double a = ixx.data()[i];
    const double b = ixy.data()[i];
    const double c = iyy.data()[i];
    if (kind == CornerResponse::kHarris) {
      const double tr = a + c;
      score[i] = a * c - b * b - p.harris_k * tr * tr;
    } else {
      score[i] = 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    }
  }

  const int margin = static_cast<int>(std::ceil(3.0 * p.sigma_w)) + 1;
  std::vector<Keypoint> kps;
  for (int y = margin; y < h - margin; ++y) {
    for (int x = margin; x < w - margin; ++x) {
      const double v = score[static_cast<std::size_t>(y) * w + x];
      if (!(v > threshold)) continue;
      if (!detail::in_mask(cfg, x, y)) continue;
      if (!detail::is_local_max_3x3(score, w, x, y)) continue;
      Keypoint kp;
      kp.x = x;
      kp.y = y;
      kp.size = 6.0 * p.sigma_w;
      kp.response = v;
      kps.push_back(kp);
    }
  }
  sort_keypoints(kps);
  return kps;
}

}  // namespace gtex
