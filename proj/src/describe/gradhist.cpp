#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>

#include "gtex/describe.hpp"
#include "gtex/geometry.hpp"

namespace gtex {

namespace {

constexpr int kCells = 4;
constexpr int kBins = 8;
constexpr int kSamples = 16;  // per side of the window
constexpr int kLevels = 6;
constexpr double kWindowFactor = 1.5;
constexpr double kClamp = 0.2;

struct GradientLevel {
  FloatImage gx;
  FloatImage gy;
};

// Central-difference gradients of the image blurred at 0.5 * 2^k (k = 0 is
// the raw image), built on first use.
class GradientPyramid {
 public:
  explicit GradientPyramid(const GrayImage& img) : base_(FloatImage::from_gray(img)) {}

  const GradientLevel& level(int k) {
    auto& slot = levels_[k];
    if (!slot) {
      const FloatImage src = k == 0 ? base_ : gaussian_blur(base_, 0.5 * std::ldexp(1.0, k));
      slot = std::make_unique<GradientLevel>();
      slot->gx = FloatImage(src.width(), src.height());
      slot->gy = FloatImage(src.width(), src.height());
      for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) {
          slot->gx.at(x, y) = 0.5 * (src.clamped(x + 1, y) - src.clamped(x - 1, y));
          slot->gy.at(x, y) = 0.5 * (src.clamped(x, y + 1) - src.clamped(x, y - 1));
        }
      }
    }
    return *slot;
  }

 private:
  FloatImage base_;
  std::array<std::unique_ptr<GradientLevel>, kLevels> levels_;
};

double bilinear(const FloatImage& img, double x, double y) {
  const int x0 = std::min(static_cast<int>(std::floor(x)), img.width() - 2);
  const int y0 = std::min(static_cast<int>(std::floor(y)), img.height() - 2);
  const double fx = x - x0;
  const double fy = y - y0;
  return (1 - fy) * ((1 - fx) * img.at(x0, y0) + fx * img.at(x0 + 1, y0)) +
         fy * ((1 - fx) * img.at(x0, y0 + 1) + fx * img.at(x0 + 1, y0 + 1));
}

// Unit L2 norm with every component at most kClamp: the fixed point of
// repeated clamp-and-renormalize, found by clamping the k largest entries and
// scaling the rest. Falls back to a single clamp pass when too few entries are
// nonzero for both constraints to hold.
void normalize_clamped(std::array<double, kCells * kCells * kBins>& h) {
  std::array<double, kCells * kCells * kBins> sorted = h;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  std::array<double, kCells * kCells * kBins + 1> tail{};
  for (int i = static_cast<int>(sorted.size()) - 1; i >= 0; --i) tail[i] = tail[i + 1] + sorted[i] * sorted[i];
  if (tail[0] == 0.0) return;
  for (std::size_t k = 0; k < sorted.size() && sorted[k] > 0.0; ++k) {
    const double budget = 1.0 - kClamp * kClamp * static_cast<double>(k);
    if (budget <= 0.0) break;
    const double lambda = std::sqrt(budget / tail[k]);
    if (lambda * sorted[k] <= kClamp) {
      for (double& v : h) v = std::min(lambda * v, kClamp);
      return;
    }
  }
  const double norm = std::sqrt(tail[0]);
  double renorm = 0.0;
  for (double& v : h) {
    v = std::min(v / norm, kClamp);
    renorm += v * v;
  }
  renorm = std::sqrt(renorm);
  for (double& v : h) v /= renorm;
}

}  // namespace

std::vector<Feature> describe_grad_hist(const GrayImage& img, const std::vector<Keypoint>& kps) {
  std::vector<Feature> out;
  if (kps.empty()) return out;
  if (img.width() < 2 || img.height() < 2) throw DescriptorError("describe_grad_hist: image too small");
  GradientPyramid pyramid(img);
  out.reserve(kps.size());

  for (const Keypoint& kp : kps) {
    if (!(kp.size > 0.0)) throw DescriptorError("describe_grad_hist: keypoint size must be positive");
    const double half = kWindowFactor * kp.size;
    const double step = 2.0 * half / kSamples;
    const int k = std::clamp(static_cast<int>(std::floor(std::log2(std::max(step, 1.0)) + 0.5)), 0, kLevels - 1);
    const GradientLevel& g = pyramid.level(k);
    const double theta = kp.angle.value_or(0.0);
    const double c = std::cos(deg2rad(theta));
    const double s = std::sin(deg2rad(theta));
    const double cell = 2.0 * half / kCells;
    const double inv_two_sigma2 = 1.0 / (2.0 * half * half);

    std::array<double, kCells * kCells * kBins> hist{};
    for (int j = 0; j < kSamples; ++j) {
      const double v = -half + (j + 0.5) * step;
      for (int i = 0; i < kSamples; ++i) {
        const double u = -half + (i + 0.5) * step;
        const double x = kp.x + c * u - s * v;
        const double y = kp.y + s * u + c * v;
        if (x < 0.0 || y < 0.0 || x > img.width() - 1.0 || y > img.height() - 1.0) continue;
        const double gx = bilinear(g.gx, x, y);
        const double gy = bilinear(g.gy, x, y);
        const double mag = std::hypot(gx, gy);
        if (mag == 0.0) continue;
        const double weight = mag * std::exp(-(u * u + v * v) * inv_two_sigma2);
        // Gradient direction expressed in the keypoint frame.
        const double ori = normalize_angle_deg(rad2deg(std::atan2(gy, gx)) - theta) / (360.0 / kBins);
        const double bx = (u + half) / cell - 0.5;
        const double by = (v + half) / cell - 0.5;
        const int ix = static_cast<int>(std::floor(bx));
        const int iy = static_cast<int>(std::floor(by));
        const double ofloor = std::floor(ori);
        const int io = static_cast<int>(ofloor) % kBins;
        const double fx = bx - ix, fy = by - iy, fo = ori - ofloor;
        for (int dy = 0; dy <= 1; ++dy) {
          const int cy = iy + dy;
          if (cy < 0 || cy >= kCells) continue;
          const double wy = dy ? fy : 1.0 - fy;
          for (int dx = 0; dx <= 1; ++dx) {
            const int cx = ix + dx;
            if (cx < 0 || cx >= kCells) continue;
            const double wx = dx ? fx : 1.0 - fx;
            for (int dobin = 0; dobin <= 1; ++dobin) {
              const int ob = (io + dobin) % kBins;
              const double wo = dobin ? fo : 1.0 - fo;
              hist[(cy * kCells + cx) * kBins + ob] += weight * wx * wy * wo;
            }
          }
        }
      }
    }

    Descriptor d;
    d.kind = DescriptorKind::kReal;
    d.values.assign(hist.size(), 0.0f);
    normalize_clamped(hist);
    for (std::size_t i = 0; i < hist.size(); ++i) d.values[i] = static_cast<float>(hist[i]);
    out.push_back({kp, std::move(d)});
  }
  return out;
}

}  // namespace gtex
