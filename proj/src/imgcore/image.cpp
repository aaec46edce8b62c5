#include "gtex/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gtex {

GrayImage::GrayImage(int width, int height, std::uint8_t fill) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("GrayImage: dimensions must be positive");
  }
  width_ = width;
  height_ = height;
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> data) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("GrayImage: dimensions must be positive");
  }
  if (data.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("GrayImage: data length does not match dimensions");
  }
  width_ = width;
  height_ = height;
  data_ = std::move(data);
}

FloatImage::FloatImage(int width, int height, double fill) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("FloatImage: dimensions must be positive");
  }
  width_ = width;
  height_ = height;
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

FloatImage FloatImage::from_gray(const GrayImage& img, double scale) {
  FloatImage out(img.width(), img.height());
  const auto& src = img.data();
  auto& dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * scale;
  return out;
}

double FloatImage::clamped(int x, int y) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return at(x, y);
}

std::uint8_t to_pixel(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

GrayImage to_gray(const FloatImage& img) {
  GrayImage out(img.width(), img.height());
  const auto& src = img.data();
  auto& dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = to_pixel(src[i]);
  return out;
}

namespace {

template <typename T, typename Image>
IntegralTable<T> build_integral(const Image& img) {
  IntegralTable<T> table(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    T row = T{};
    for (int x = 0; x < img.width(); ++x) {
      row += static_cast<T>(img.at(x, y));
      table.entry(x + 1, y + 1) = table.entry(x + 1, y) + row;
    }
  }
  return table;
}

}  // namespace

IntegralImage integral(const GrayImage& img) { return build_integral<std::int64_t>(img); }
IntegralTable<double> integral(const FloatImage& img) { return build_integral<double>(img); }

// ---------------------------------------------------------------------------
// PGM

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
bool next_token(std::istream& in, std::string& token) {
  token.clear();
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n' && c != '\r') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c) && c != '#') {
    token.push_back(static_cast<char>(c));
    c = in.get();
  }
  if (c == '#') in.unget();
  return !token.empty();
}

int parse_header_int(std::istream& in, const char* field) {
  std::string tok;
  if (!next_token(in, tok)) {
    throw PgmError(PgmError::Kind::kMalformedHeader, std::string("malformed PGM header: missing ") + field);
  }
  if (!std::all_of(tok.begin(), tok.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
    throw PgmError(PgmError::Kind::kMalformedHeader, std::string("malformed PGM header: bad ") + field + " '" + tok + "'");
  }
  try {
    return std::stoi(tok);
  } catch (const std::out_of_range&) {
    throw PgmError(PgmError::Kind::kMalformedHeader, std::string("malformed PGM header: ") + field + " out of range");
  }
}

}  // namespace

GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PgmError(PgmError::Kind::kOpen, "cannot open " + path.string());

  std::string magic;
  if (!next_token(in, magic) || (magic != "P5" && magic != "P2")) {
    throw PgmError(PgmError::Kind::kMalformedHeader, "malformed PGM header: expected P5 or P2 magic");
  }
  const int width = parse_header_int(in, "width");
  const int height = parse_header_int(in, "height");
  const int maxval = parse_header_int(in, "maxval");
  if (width < 1 || height < 1) {
    throw PgmError(PgmError::Kind::kMalformedHeader, "malformed PGM header: non-positive dimensions");
  }
  if (maxval < 1) {
    throw PgmError(PgmError::Kind::kMalformedHeader, "malformed PGM header: maxval must be positive");
  }
  if (maxval > 255) {
    throw PgmError(PgmError::Kind::kUnsupportedMaxval, "unsupported maxval " + std::to_string(maxval));
  }

  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<std::uint8_t> data(n);
  if (magic == "P5") {
    // Exactly one whitespace byte separates the header from the raster; it
    // was consumed by next_token.
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
      throw PgmError(PgmError::Kind::kTruncated, "truncated PGM payload: expected " + std::to_string(n) +
                                                      " bytes, got " + std::to_string(in.gcount()));
    }
  } else {
    std::string tok;
    for (std::size_t i = 0; i < n; ++i) {
      if (!next_token(in, tok)) {
        throw PgmError(PgmError::Kind::kTruncated, "truncated PGM payload: expected " + std::to_string(n) +
                                                        " values, got " + std::to_string(i));
      }
      int v = 0;
      try {
        v = std::stoi(tok);
      } catch (const std::exception&) {
        throw PgmError(PgmError::Kind::kMalformedHeader, "malformed PGM raster value '" + tok + "'");
      }
      if (v < 0 || v > maxval) {
        throw PgmError(PgmError::Kind::kMalformedHeader, "PGM raster value exceeds maxval");
      }
      data[i] = static_cast<std::uint8_t>(v);
    }
  }
  return GrayImage(width, height, std::move(data));
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PgmError(PgmError::Kind::kWrite, "cannot write " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data().data()), static_cast<std::streamsize>(img.data().size()));
  if (!out) throw PgmError(PgmError::Kind::kWrite, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Filtering

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_kernel: sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

FloatImage gaussian_blur(const FloatImage& img, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = img.width();
  const int h = img.height();

  FloatImage tmp(w, h);
  std::vector<double> line(w + 2 * r);
  for (int y = 0; y < h; ++y) {
    for (int i = 0; i < w + 2 * r; ++i) line[i] = img.at(std::clamp(i - r, 0, w - 1), y);
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int j = 0; j <= 2 * r; ++j) acc += k[j] * line[x + j];
      tmp.at(x, y) = acc;
    }
  }

  FloatImage out(w, h);
  std::vector<double> col(h + 2 * r);
  for (int x = 0; x < w; ++x) {
    for (int i = 0; i < h + 2 * r; ++i) col[i] = tmp.at(x, std::clamp(i - r, 0, h - 1));
    for (int y = 0; y < h; ++y) {
      double acc = 0.0;
      for (int j = 0; j <= 2 * r; ++j) acc += k[j] * col[y + j];
      out.at(x, y) = acc;
    }
  }
  return out;
}

FloatImage gaussian_blur(const GrayImage& img, double sigma) {
  return gaussian_blur(FloatImage::from_gray(img), sigma);
}

Gradients gradients(const FloatImage& img) {
  const int w = img.width();
  const int h = img.height();
  if (w < 3 || h < 3) throw std::invalid_argument("gradients: image must be at least 3x3");
  Gradients g{FloatImage(w, h), FloatImage(w, h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double tl = img.clamped(x - 1, y - 1), tc = img.clamped(x, y - 1), tr = img.clamped(x + 1, y - 1);
      const double ml = img.clamped(x - 1, y), mr = img.clamped(x + 1, y);
      const double bl = img.clamped(x - 1, y + 1), bc = img.clamped(x, y + 1), br = img.clamped(x + 1, y + 1);
      g.gx.at(x, y) = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
      g.gy.at(x, y) = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Resampling

namespace {

// Catmull-Rom weights (a = -0.5) for offsets -1, 0, 1, 2 at fractional t.
void cubic_weights(double t, double w[4]) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  w[0] = -0.5 * t3 + t2 - 0.5 * t;
  w[1] = 1.5 * t3 - 2.5 * t2 + 1.0;
  w[2] = -1.5 * t3 + 2.0 * t2 + 0.5 * t;
  w[3] = 0.5 * t3 - 0.5 * t2;
}

}  // namespace

double sample_bicubic(const FloatImage& img, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int ix = static_cast<int>(fx);
  const int iy = static_cast<int>(fy);
  double wx[4];
  double wy[4];
  cubic_weights(x - fx, wx);
  cubic_weights(y - fy, wy);
  double acc = 0.0;
  for (int j = 0; j < 4; ++j) {
    double row = 0.0;
    for (int i = 0; i < 4; ++i) row += wx[i] * img.clamped(ix - 1 + i, iy - 1 + j);
    acc += wy[j] * row;
  }
  return acc;
}

GrayImage warp_rotate(const GrayImage& img, double angle_deg) {
  const int w = img.width();
  const int h = img.height();
  const FloatImage src = FloatImage::from_gray(img);
  const double cx = 0.5 * (w - 1);
  const double cy = 0.5 * (h - 1);
  const double rad = angle_deg * M_PI / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  constexpr double kEps = 1e-9;

  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Forward map is p' = c + [[c, s], [-s, c]] (p - c); invert it.
      const double dx = x - cx;
      const double dy = y - cy;
      const double sx = cx + c * dx - s * dy;
      const double sy = cy + s * dx + c * dy;
      if (sx < -kEps || sy < -kEps || sx > w - 1 + kEps || sy > h - 1 + kEps) {
        out.at(x, y) = 0;
        continue;
      }
      out.at(x, y) = to_pixel(sample_bicubic(src, sx, sy));
    }
  }
  return out;
}

GrayImage shift_image(const GrayImage& img, int dx, int dy) {
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    const int sy = y + dy;
    if (sy < 0 || sy >= img.height()) continue;
    for (int x = 0; x < img.width(); ++x) {
      const int sx = x + dx;
      if (sx < 0 || sx >= img.width()) continue;
      out.at(x, y) = img.at(sx, sy);
    }
  }
  return out;
}

}  // namespace gtex
