#include <algorithm>
#include <array>
#include <cmath>

#include "gtex/detect.hpp"
#include "internal.hpp"

namespace gtex {

namespace {

constexpr int kDogBorder = 5;
constexpr int kOrientationBins = 36;
constexpr double kPeakRatio = 0.8;

FloatImage downsample2(const FloatImage& img) {
  const int w = std::max(1, img.width() / 2);
  const int h = std::max(1, img.height() / 2);
  FloatImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.at(x, y) = img.at(2 * x, 2 * y);
  }
  return out;
}

FloatImage subtract(const FloatImage& a, const FloatImage& b) {
  FloatImage out(a.width(), a.height());
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
  return out;
}

struct Octave {
  std::vector<FloatImage> gauss;  // intervals + 3 levels
  std::vector<FloatImage> dog;    // intervals + 2 levels
};

std::vector<Octave> build_pyramid(const GrayImage& img, const DogParams& p) {
  const int s = p.intervals;
  const double k = std::pow(2.0, 1.0 / s);
  std::vector<double> sig(s + 3);
  sig[0] = p.sigma0;
  // Incremental blur taking level i-1 to level i.
  std::vector<double> inc(s + 3, 0.0);
  for (int i = 1; i < s + 3; ++i) {
    const double prev = p.sigma0 * std::pow(k, i - 1);
    const double next = prev * k;
    inc[i] = std::sqrt(next * next - prev * prev);
  }

  const double base_sigma = std::sqrt(std::max(p.sigma0 * p.sigma0 - p.assumed_blur * p.assumed_blur, 0.01));
  FloatImage base = gaussian_blur(FloatImage::from_gray(img, 1.0 / 255.0), base_sigma);

  std::vector<Octave> pyr;
  for (int o = 0; o < p.octaves; ++o) {
    if (base.width() < 2 * kDogBorder + 3 || base.height() < 2 * kDogBorder + 3) break;
    Octave oct;
    oct.gauss.push_back(base);
    for (int i = 1; i < s + 3; ++i) oct.gauss.push_back(gaussian_blur(oct.gauss.back(), inc[i]));
    for (int i = 0; i < s + 2; ++i) oct.dog.push_back(subtract(oct.gauss[i + 1], oct.gauss[i]));
    base = downsample2(oct.gauss[s]);
    pyr.push_back(std::move(oct));
  }
  return pyr;
}

bool is_extremum(const std::vector<FloatImage>& dog, int i, int x, int y) {
  const double v = dog[i].at(x, y);
  const bool want_max = v > 0.0;
  for (int di = -1; di <= 1; ++di) {
    const FloatImage& layer = dog[i + di];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (di == 0 && dx == 0 && dy == 0) continue;
        const double n = layer.at(x + dx, y + dy);
        if (want_max ? !(v > n) : !(v < n)) return false;
      }
    }
  }
  return true;
}

// Solves H * x = b for symmetric 3x3 H via Cramer's rule.
bool solve3(const std::array<std::array<double, 3>, 3>& H, const std::array<double, 3>& b,
            std::array<double, 3>& x) {
  const double det = H[0][0] * (H[1][1] * H[2][2] - H[1][2] * H[2][1]) -
                     H[0][1] * (H[1][0] * H[2][2] - H[1][2] * H[2][0]) +
                     H[0][2] * (H[1][0] * H[2][1] - H[1][1] * H[2][0]);
  if (std::abs(det) < 1e-18) return false;
  for (int c = 0; c < 3; ++c) {
    auto M = H;
    for (int r = 0; r < 3; ++r) M[r][c] = b[r];
    const double dc = M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) -
                      M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
                      M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]);
    x[c] = dc / det;
  }
  return true;
}

struct Refined {
  int x, y, i;
  double ox, oy, oi;
  double value;
};

// Quadratic fit of the DoG around (x, y, i); moves to the neighboring sample
// while the offset exceeds half a sample in any dimension.
std::optional<Refined> refine(const std::vector<FloatImage>& dog, int x, int y, int i, const DogParams& p) {
  const int w = dog[0].width();
  const int h = dog[0].height();
  for (int step = 0; step < p.max_refine_steps; ++step) {
    const FloatImage& c = dog[i];
    const FloatImage& prev = dog[i - 1];
    const FloatImage& next = dog[i + 1];
    const double v = c.at(x, y);
    const std::array<double, 3> grad{0.5 * (c.at(x + 1, y) - c.at(x - 1, y)),
                                     0.5 * (c.at(x, y + 1) - c.at(x, y - 1)),
                                     0.5 * (next.at(x, y) - prev.at(x, y))};
    const double dxx = c.at(x + 1, y) + c.at(x - 1, y) - 2.0 * v;
    const double dyy = c.at(x, y + 1) + c.at(x, y - 1) - 2.0 * v;
    const double dss = next.at(x, y) + prev.at(x, y) - 2.0 * v;
    const double dxy = 0.25 * (c.at(x + 1, y + 1) - c.at(x - 1, y + 1) - c.at(x + 1, y - 1) + c.at(x - 1, y - 1));
    const double dxs = 0.25 * (next.at(x + 1, y) - next.at(x - 1, y) - prev.at(x + 1, y) + prev.at(x - 1, y));
    const double dys = 0.25 * (next.at(x, y + 1) - next.at(x, y - 1) - prev.at(x, y + 1) + prev.at(x, y - 1));
    const std::array<std::array<double, 3>, 3> H{{{dxx, dxy, dxs}, {dxy, dyy, dys}, {dxs, dys, dss}}};
    std::array<double, 3> off{};
    if (!solve3(H, {-grad[0], -grad[1], -grad[2]}, off)) return std::nullopt;

    if (std::abs(off[0]) < 0.5 && std::abs(off[1]) < 0.5 && std::abs(off[2]) < 0.5) {
      const double value = v + 0.5 * (grad[0] * off[0] + grad[1] * off[1] + grad[2] * off[2]);
      return Refined{x, y, i, off[0], off[1], off[2], value};
    }
    if (!std::isfinite(off[0]) || !std::isfinite(off[1]) || !std::isfinite(off[2])) return std::nullopt;
    x += static_cast<int>(std::lround(off[0]));
    y += static_cast<int>(std::lround(off[1]));
    i += static_cast<int>(std::lround(off[2]));
    if (i < 1 || i > p.intervals || x < kDogBorder || x >= w - kDogBorder || y < kDogBorder ||
        y >= h - kDogBorder) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

bool passes_edge_test(const FloatImage& d, int x, int y, double r) {
  const double v = d.at(x, y);
  const double dxx = d.at(x + 1, y) + d.at(x - 1, y) - 2.0 * v;
  const double dyy = d.at(x, y + 1) + d.at(x, y - 1) - 2.0 * v;
  const double dxy = 0.25 * (d.at(x + 1, y + 1) - d.at(x - 1, y + 1) - d.at(x + 1, y - 1) + d.at(x - 1, y - 1));
  const double tr = dxx + dyy;
  const double det = dxx * dyy - dxy * dxy;
  if (det <= 0.0) return false;
  return tr * tr / det < (r + 1.0) * (r + 1.0) / r;
}

}  // namespace

std::vector<Keypoint> assign_orientation(const FloatImage& level, const Keypoint& kp) {
  const double scale = std::ldexp(1.0, kp.octave);
  const double lx = kp.x / scale;
  const double ly = kp.y / scale;
  const double sigma = kp.size / 3.0 / scale;
  const double sigma_w = 1.5 * sigma;
  const int radius = static_cast<int>(std::lround(3.0 * sigma_w));
  const int cx = static_cast<int>(std::lround(lx));
  const int cy = static_cast<int>(std::lround(ly));
  if (cx - radius - 1 < 0 || cy - radius - 1 < 0 || cx + radius + 1 >= level.width() ||
      cy + radius + 1 >= level.height()) {
    return {};
  }

  std::array<double, kOrientationBins> hist{};
  const double denom = 2.0 * sigma_w * sigma_w;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const int x = cx + dx;
      const int y = cy + dy;
      const double gx = level.at(x + 1, y) - level.at(x - 1, y);
      const double gy = level.at(x, y + 1) - level.at(x, y - 1);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      const double angle = normalize_angle_deg(rad2deg(std::atan2(gy, gx)));
      const int bin = static_cast<int>(std::lround(angle * kOrientationBins / 360.0)) % kOrientationBins;
      hist[bin] += mag * std::exp(-(dx * dx + dy * dy) / denom);
    }
  }

  std::array<double, kOrientationBins> smooth{};
  for (int b = 0; b < kOrientationBins; ++b) {
    auto at = [&](int off) { return hist[(b + off + kOrientationBins) % kOrientationBins]; };
    smooth[b] = (at(-2) + at(2)) * (1.0 / 16.0) + (at(-1) + at(1)) * (4.0 / 16.0) + at(0) * (6.0 / 16.0);
  }
  const double peak = *std::max_element(smooth.begin(), smooth.end());
  std::vector<Keypoint> out;
  if (!(peak > 0.0)) return out;
  for (int b = 0; b < kOrientationBins; ++b) {
    const double l = smooth[(b + kOrientationBins - 1) % kOrientationBins];
    const double r = smooth[(b + 1) % kOrientationBins];
    const double c = smooth[b];
    if (!(c > l && c > r && c >= kPeakRatio * peak)) continue;
    const double offset = 0.5 * (l - r) / (l - 2.0 * c + r);
    Keypoint o = kp;
    o.angle = normalize_angle_deg((b + offset) * 360.0 / kOrientationBins);
    out.push_back(o);
  }
  return out;
}

std::vector<Keypoint> detect_dog(const GrayImage& img, const DetectorConfig& cfg) {
  if (img.width() < 32 || img.height() < 32) throw DetectorError("detect_dog: image must be at least 32x32");
  const DogParams& p = cfg.dog;
  const auto pyr = build_pyramid(img, p);
  const double prefilter = 0.5 * p.contrast_threshold;

  std::vector<Keypoint> kps;
  for (std::size_t o = 0; o < pyr.size(); ++o) {
    const Octave& oct = pyr[o];
    const int w = oct.dog[0].width();
    const int h = oct.dog[0].height();
    const double scale = std::ldexp(1.0, static_cast<int>(o));
    for (int i = 1; i <= p.intervals; ++i) {
      for (int y = kDogBorder; y < h - kDogBorder; ++y) {
        for (int x = kDogBorder; x < w - kDogBorder; ++x) {
          if (!(std::abs(oct.dog[i].at(x, y)) > prefilter)) continue;
          if (!is_extremum(oct.dog, i, x, y)) continue;
          const auto r = refine(oct.dog, x, y, i, p);
          if (!r) continue;
          if (!(std::abs(r->value) >= p.contrast_threshold)) continue;
          if (!passes_edge_test(oct.dog[r->i], r->x, r->y, p.edge_ratio)) continue;

          Keypoint kp;
          kp.x = (r->x + r->ox) * scale;
          kp.y = (r->y + r->oy) * scale;
          if (kp.x < 0.0 || kp.y < 0.0 || kp.x > img.width() - 1 || kp.y > img.height() - 1) continue;
          if (!detail::in_mask(cfg, kp.x, kp.y)) continue;
          const double sigma = p.sigma0 * std::pow(2.0, (r->i + r->oi) / p.intervals) * scale;
          kp.size = 3.0 * sigma;
          kp.response = std::abs(r->value);
          kp.octave = static_cast<int>(o);
          if (!p.orientation) {
            kps.push_back(kp);
            continue;
          }
          // Orientation is measured on the Gaussian level nearest the scale.
          const int level = std::clamp(static_cast<int>(std::lround(r->i + r->oi)), 0, p.intervals + 2);
          for (auto& oriented : assign_orientation(oct.gauss[level], kp)) kps.push_back(oriented);
        }
      }
    }
  }
  sort_keypoints(kps);
  return kps;
}

}  // namespace gtex
