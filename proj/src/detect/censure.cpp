#include <cmath>

#include "gtex/detect.hpp"
#include "internal.hpp"

namespace gtex {

double censure_response(const IntegralImage& ii, int x, int y, int n) {
  const int inner_side = 2 * n + 1;
  const int outer_side = 4 * n + 1;
  const double inner = static_cast<double>(ii.box_sum(x - n, y - n, x + n + 1, y + n + 1));
  const double outer = static_cast<double>(ii.box_sum(x - 2 * n, y - 2 * n, x + 2 * n + 1, y + 2 * n + 1));
  const double inner_area = static_cast<double>(inner_side) * inner_side;
  const double ring_area = static_cast<double>(outer_side) * outer_side - inner_area;
  return inner / inner_area - (outer - inner) / ring_area;
}

std::vector<Keypoint> detect_censure(const GrayImage& img, const DetectorConfig& cfg) {
  const CensureParams& p = cfg.censure;
  const int ns = p.n_scales;
  const int w = img.width();
  const int h = img.height();
  const int largest = 2 * (4 * ns + 1) + 1;
  if (w < largest || h < largest) {
    throw DetectorError("detect_censure: image smaller than the largest filter (" + std::to_string(largest) + " px)");
  }

  const IntegralImage ii = integral(img);
  // Every scale is evaluated on the same support so scale neighbors exist.
  const int border = 2 * ns;
  std::vector<std::vector<double>> resp(ns, std::vector<double>(static_cast<std::size_t>(w) * h, 0.0));
  for (int s = 0; s < ns; ++s) {
    for (int y = border; y < h - border; ++y) {
      for (int x = border; x < w - border; ++x) {
        resp[s][static_cast<std::size_t>(y) * w + x] = std::abs(censure_response(ii, x, y, s + 1));
      }
    }
  }

  // Structure tensor sums for the line (edge) test.
  const Gradients g = gradients(FloatImage::from_gray(img));
  FloatImage gxx(w, h), gxy(w, h), gyy(w, h);
  for (std::size_t i = 0; i < gxx.data().size(); ++i) {
    const double gx = g.gx.data()[i] / 8.0;
    const double gy = g.gy.data()[i] / 8.0;
    gxx.data()[i] = gx * gx;
    gxy.data()[i] = gx * gy;
    gyy.data()[i] = gy * gy;
  }
  const auto sxx = integral(gxx);
  const auto sxy = integral(gxy);
  const auto syy = integral(gyy);

  std::vector<Keypoint> kps;
  for (int s = 0; s < ns; ++s) {
    const int n = s + 1;
    for (int y = border + 1; y < h - border - 1; ++y) {
      for (int x = border + 1; x < w - border - 1; ++x) {
        const std::size_t idx = static_cast<std::size_t>(y) * w + x;
        const double v = resp[s][idx];
        if (!(v > p.response_threshold)) continue;
        if (!detail::in_mask(cfg, x, y)) continue;
        if (!detail::is_local_max_3x3(resp[s], w, x, y)) continue;
        bool is_max = true;
        for (int ds : {-1, 1}) {
          const int t = s + ds;
          if (t < 0 || t >= ns) continue;
          for (int dy = -1; dy <= 1 && is_max; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const double nb = resp[t][static_cast<std::size_t>(y + dy) * w + (x + dx)];
              // Coarser scale counts as later in the scan order.
              if (ds < 0 ? !(v > nb) : !(v >= nb)) {
                is_max = false;
                break;
              }
            }
          }
        }
        if (!is_max) continue;

        const int half = 2 * n;
        const double a = sxx.box_sum(x - half, y - half, x + half + 1, y + half + 1);
        const double b = sxy.box_sum(x - half, y - half, x + half + 1, y + half + 1);
        const double c = syy.box_sum(x - half, y - half, x + half + 1, y + half + 1);
        const double det = a * c - b * b;
        const double tr = a + c;
        if (!(det > 0.0) || tr * tr / det > p.line_threshold) continue;

        Keypoint kp;
        kp.x = x;
        kp.y = y;
        kp.size = 4.0 * n + 1.0;
        kp.response = v;
        kp.octave = 0;
        kps.push_back(kp);
      }
    }
  }
  sort_keypoints(kps);
  return kps;
}

}  // namespace gtex
