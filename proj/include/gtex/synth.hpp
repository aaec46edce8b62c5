#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gtex/geometry.hpp"
#include "gtex/image.hpp"

namespace gtex {

/// Axis-aligned half-open rectangle [x0, x1) x [y0, y1) with an optional
/// per-pixel validity bitmap covering the whole image; pixel i covers [i, i + 1).
class RegionMask {
 public:
  RegionMask() = default;
  RegionMask(int x0, int y0, int x1, int y1);

  static RegionMask full(int width, int height) { return RegionMask(0, 0, width, height); }

  int x0() const { return x0_; }
  int y0() const { return y0_; }
  int x1() const { return x1_; }
  int y1() const { return y1_; }
  int rect_width() const { return x1_ - x0_; }
  int rect_height() const { return y1_ - y0_; }

  bool has_bitmap() const { return !bitmap_.empty(); }
  void set_bitmap(int width, int height, std::vector<std::uint8_t> bits);
  const std::vector<std::uint8_t>& bitmap() const { return bitmap_; }
  int bitmap_width() const { return bitmap_width_; }
  int bitmap_height() const { return bitmap_height_; }

  bool contains(double x, double y) const;
  bool contains(Point2 p) const { return contains(p.x, p.y); }

  /// Shrinks the rectangle by `margin` on every side and erodes the bitmap
  /// (if any) with a square structuring element of the same half-width.
  RegionMask eroded(int margin) const;
  RegionMask translated(int dx, int dy) const;

  std::size_t count_valid(int width, int height) const;

 private:
  int x0_ = 0, y0_ = 0, x1_ = 0, y1_ = 0;
  int bitmap_width_ = 0;
  int bitmap_height_ = 0;
  std::vector<std::uint8_t> bitmap_;
};

double rect_iou(const RegionMask& a, const RegionMask& b);

enum class TransformKind { kRotation, kTranslation, kNoise, kGamma };

std::string to_string(TransformKind kind);
std::optional<TransformKind> transform_kind_from_string(const std::string& name);

/// One synthetic transformation. `parameter` is the angle in degrees, the
/// target mask IoU, the noise standard deviation, or the gamma exponent.
struct TransformSpec {
  TransformKind kind = TransformKind::kRotation;
  double parameter = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

class SynthError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// g_out = round(255 * (g_in / 255)^gamma), via a 256-entry table.
std::vector<std::uint8_t> gamma_lut(double gamma);
GrayImage apply_gamma(const GrayImage& img, double gamma);

/// Adds i.i.d. zero-mean Gaussian noise, then clamps and rounds.
GrayImage apply_noise(const GrayImage& img, double sigma, std::uint64_t seed);

struct TranslationMasks {
  RegionMask ref;
  /// Reference mask pushed toward the lower-right corner by `offset` in both
  /// axes, in reference-image coordinates.
  RegionMask test;
  int offset = 0;
  double iou = 1.0;
  /// Reference -> test point map when the test image is the section under
  /// the test mask moved onto the reference window: a shift of -offset.
  GroundTruth2D gt;
};

double diagonal_offset_iou(int mask_w, int mask_h, int d);

/// Chooses the integer diagonal offset whose mask IoU is closest to
/// target_iou. The pair of masks is centered in the frame.
TranslationMasks make_translation_masks(int width, int height, double target_iou, int mask_w, int mask_h);
inline TranslationMasks make_translation_masks(int width, int height, double target_iou, int mask_size) {
  return make_translation_masks(width, height, target_iou, mask_size, mask_size);
}

struct RotationCase {
  GrayImage test;
  GroundTruth2D gt;
  /// Full-frame rectangle plus a bitmap of pixels whose inverse-mapped
  /// source location lies inside the source image (shrunk by `margin`).
  RegionMask valid;
};

RotationCase rotation_case(const GrayImage& img, double angle_deg, int margin = 0);

enum class TextureKind { kBlobs, kFractalNoise, kSpeckle };

std::string to_string(TextureKind kind);
std::optional<TextureKind> texture_kind_from_string(const std::string& name);

/// Procedural ground-like textures, deterministic per (kind, size, seed),
/// stretched to the full 8-bit range.
GrayImage generate_texture(TextureKind kind, int width, int height, std::uint64_t seed);

/// Concrete evaluation case for one transform on a width x height frame.
struct SuiteCase {
  TransformSpec spec;
  GroundTruth2D gt;
  /// Reference detection region (reference-image coordinates).
  RegionMask mask;
};

std::vector<TransformSpec> default_sweep(std::uint64_t noise_seed = 1);

std::vector<SuiteCase> transform_suite(const std::vector<TransformSpec>& specs, int width, int height,
                                       double translation_mask_fraction = 0.7);

/// Reference/test images with per-image detection masks and ground truth.
struct EvalPair {
  GrayImage ref;
  GrayImage test;
  RegionMask ref_mask;   // reference-image coordinates
  RegionMask test_mask;  // test-image coordinates
  GroundTruth2D gt;      // reference -> test
  std::vector<TransformSpec> specs;
};

struct PairOptions {
  double translation_mask_fraction = 0.7;
  /// Distance kept from image borders and from undefined (rotated-in) pixels.
  int border = 16;
};

/// Applies the transforms in order to produce a test image. Rotation and
/// translation compose their ground truth; noise and gamma are photometric.
EvalPair make_eval_pair(const GrayImage& source, const std::vector<TransformSpec>& specs,
                        const PairOptions& options = {});

}  // namespace gtex
