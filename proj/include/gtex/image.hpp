#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gtex {

/// 8-bit single-channel raster, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);
  GrayImage(int width, int height, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  std::uint8_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  bool operator==(const GrayImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Real-valued raster used for intermediate results (scale space, gradients).
class FloatImage {
 public:
  FloatImage() = default;
  FloatImage(int width, int height, double fill = 0.0);

  static FloatImage from_gray(const GrayImage& img, double scale = 1.0);

  int width() const { return width_; }
  int height() const { return height_; }

  double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  // Edge-replicating access.
  double clamped(int x, int y) const;

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// Clamp to [0, 255] and round half up.
std::uint8_t to_pixel(double v);
GrayImage to_gray(const FloatImage& img);

/// Summed-area table. Entry (x, y) holds the sum of all source values with
/// coordinates strictly less than (x, y); row 0 and column 0 are zero.
template <typename T>
class IntegralTable {
 public:
  IntegralTable() = default;
  IntegralTable(int width, int height) : width_(width), height_(height),
      table_(static_cast<std::size_t>(width + 1) * (height + 1), T{}) {}

  int width() const { return width_; }
  int height() const { return height_; }

  T entry(int x, int y) const { return table_[static_cast<std::size_t>(y) * (width_ + 1) + x]; }
  T& entry(int x, int y) { return table_[static_cast<std::size_t>(y) * (width_ + 1) + x]; }

  /// Sum over the half-open box [x0, x1) x [y0, y1).
  T box_sum(int x0, int y0, int x1, int y1) const {
    return entry(x1, y1) - entry(x0, y1) - entry(x1, y0) + entry(x0, y0);
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> table_;
};

using IntegralImage = IntegralTable<std::int64_t>;

IntegralImage integral(const GrayImage& img);
IntegralTable<double> integral(const FloatImage& img);

class PgmError : public std::runtime_error {
 public:
  enum class Kind { kOpen, kMalformedHeader, kUnsupportedMaxval, kTruncated, kWrite };
  PgmError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Reads binary (P5) or ASCII (P2) PGM files with maxval <= 255. Pixel values
/// are returned as stored, without rescaling.
GrayImage load_pgm(const std::filesystem::path& path);
/// Writes a binary P5 file.
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

/// Discrete normalized Gaussian kernel of radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur with edge replication.
FloatImage gaussian_blur(const FloatImage& img, double sigma);
FloatImage gaussian_blur(const GrayImage& img, double sigma);

struct Gradients {
  FloatImage gx;
  FloatImage gy;
};

/// 3x3 Sobel derivatives (unnormalized, weights 1-2-1), edges replicated.
Gradients gradients(const FloatImage& img);

/// Catmull-Rom bicubic sample with edge-replicated stencil.
double sample_bicubic(const FloatImage& img, double x, double y);

/// Rotates image content counter-clockwise as displayed (y axis pointing
/// down) by angle_deg about ((w-1)/2, (h-1)/2). Pixels whose source lies
/// outside the input are 0.
GrayImage warp_rotate(const GrayImage& img, double angle_deg);

/// Integer shift: out(x, y) = in(x + dx, y + dy), 0 outside.
GrayImage shift_image(const GrayImage& img, int dx, int dy);

}  // namespace gtex
