#include "gtex/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gtex {

// ---------------------------------------------------------------------------
// RegionMask

RegionMask::RegionMask(int x0, int y0, int x1, int y1) : x0_(x0), y0_(y0), x1_(x1), y1_(y1) {
  if (x0 < 0 || y0 < 0 || x1 <= x0 || y1 <= y0) {
    throw std::invalid_argument("RegionMask: rectangle must satisfy 0 <= x0 < x1, 0 <= y0 < y1");
  }
}

void RegionMask::set_bitmap(int width, int height, std::vector<std::uint8_t> bits) {
  if (bits.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("RegionMask: bitmap size mismatch");
  }
  bitmap_width_ = width;
  bitmap_height_ = height;
  bitmap_ = std::move(bits);
}

bool RegionMask::contains(double x, double y) const {
  if (!(x >= x0_ && x < x1_ && y >= y0_ && y < y1_)) return false;
  if (bitmap_.empty()) return true;
  // Pixel i covers [i, i + 1), the same convention as the rectangle.
  const int ix = static_cast<int>(std::floor(x));
  const int iy = static_cast<int>(std::floor(y));
  if (ix < 0 || iy < 0 || ix >= bitmap_width_ || iy >= bitmap_height_) return false;
  return bitmap_[static_cast<std::size_t>(iy) * bitmap_width_ + ix] != 0;
}

RegionMask RegionMask::eroded(int margin) const {
  if (margin <= 0) return *this;
  RegionMask out(x0_ + margin, y0_ + margin, std::max(x0_ + margin + 1, x1_ - margin),
                 std::max(y0_ + margin + 1, y1_ - margin));
  if (!bitmap_.empty()) {
    const int w = bitmap_width_;
    const int h = bitmap_height_;
    // Separable min filter: a pixel survives if every pixel in its
    // (2m+1)^2 neighborhood is valid; off-image counts as invalid.
    std::vector<std::uint8_t> rows(bitmap_.size(), 0);
    for (int y = 0; y < h; ++y) {
      int run = 0;
      std::vector<int> run_left(w);
      for (int x = 0; x < w; ++x) {
        run = bitmap_[static_cast<std::size_t>(y) * w + x] ? run + 1 : 0;
        run_left[x] = run;
      }
      for (int x = 0; x < w; ++x) {
        const int right = x + margin;
        rows[static_cast<std::size_t>(y) * w + x] = (right < w && run_left[right] >= 2 * margin + 1) ? 1 : 0;
      }
    }
    std::vector<std::uint8_t> bits(bitmap_.size(), 0);
    for (int x = 0; x < w; ++x) {
      int run = 0;
      std::vector<int> run_up(h);
      for (int y = 0; y < h; ++y) {
        run = rows[static_cast<std::size_t>(y) * w + x] ? run + 1 : 0;
        run_up[y] = run;
      }
      for (int y = 0; y < h; ++y) {
        const int down = y + margin;
        bits[static_cast<std::size_t>(y) * w + x] = (down < h && run_up[down] >= 2 * margin + 1) ? 1 : 0;
      }
    }
    out.set_bitmap(w, h, std::move(bits));
  }
  return out;
}

RegionMask RegionMask::translated(int dx, int dy) const {
  if (has_bitmap()) throw std::logic_error("RegionMask::translated: bitmap masks cannot be translated");
  return RegionMask(x0_ + dx, y0_ + dy, x1_ + dx, y1_ + dy);
}

std::size_t RegionMask::count_valid(int width, int height) const {
  std::size_t n = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (contains(x, y)) ++n;
    }
  }
  return n;
}

double rect_iou(const RegionMask& a, const RegionMask& b) {
  const int ix = std::max(0, std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0()));
  const int iy = std::max(0, std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0()));
  const double inter = static_cast<double>(ix) * iy;
  const double uni = static_cast<double>(a.rect_width()) * a.rect_height() +
                     static_cast<double>(b.rect_width()) * b.rect_height() - inter;
  return inter / uni;
}

// ---------------------------------------------------------------------------
// Transform specs

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::kRotation: return "rotation";
    case TransformKind::kTranslation: return "translation";
    case TransformKind::kNoise: return "noise";
    case TransformKind::kGamma: return "gamma";
  }
  return "unknown";
}

std::optional<TransformKind> transform_kind_from_string(const std::string& name) {
  if (name == "rotation") return TransformKind::kRotation;
  if (name == "translation") return TransformKind::kTranslation;
  if (name == "noise") return TransformKind::kNoise;
  if (name == "gamma") return TransformKind::kGamma;
  return std::nullopt;
}

void TransformSpec::validate() const {
  auto check = [&](double lo, double hi, const char* what) {
    if (!(parameter >= lo && parameter <= hi)) {
      throw SynthError(std::string(what) + " parameter " + std::to_string(parameter) + " outside [" +
                       std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
  };
  switch (kind) {
    case TransformKind::kRotation: check(0.0, 180.0, "rotation"); break;
    case TransformKind::kTranslation: check(0.2, 1.0, "translation"); break;
    case TransformKind::kNoise: check(0.0, 40.0, "noise"); break;
    case TransformKind::kGamma: check(0.1, 3.0, "gamma"); break;
  }
}

// ---------------------------------------------------------------------------
// Photometric transforms

std::vector<std::uint8_t> gamma_lut(double gamma) {
  if (!(gamma >= 0.1 && gamma <= 3.0)) throw SynthError("gamma must lie in [0.1, 3.0]");
  std::vector<std::uint8_t> lut(256);
  for (int g = 0; g < 256; ++g) {
    lut[g] = static_cast<std::uint8_t>(std::round(255.0 * std::pow(g / 255.0, gamma)));
  }
  return lut;
}

GrayImage apply_gamma(const GrayImage& img, double gamma) {
  const auto lut = gamma_lut(gamma);
  GrayImage out = img;
  for (auto& v : out.data()) v = lut[v];
  return out;
}

GrayImage apply_noise(const GrayImage& img, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0 && sigma <= 40.0)) throw SynthError("noise sigma must lie in [0, 40]");
  if (sigma == 0.0) return img;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  GrayImage out = img;
  for (auto& v : out.data()) v = to_pixel(v + noise(rng));
  return out;
}

// ---------------------------------------------------------------------------
// Geometric transforms

double diagonal_offset_iou(int mask_w, int mask_h, int d) {
  const double inter = static_cast<double>(std::max(0, mask_w - d)) * std::max(0, mask_h - d);
  const double area = static_cast<double>(mask_w) * mask_h;
  return inter / (2.0 * area - inter);
}

TranslationMasks make_translation_masks(int width, int height, double target_iou, int mask_w, int mask_h) {
  if (!(target_iou >= 0.2 && target_iou <= 1.0)) throw SynthError("target IoU must lie in [0.2, 1.0]");
  if (mask_w < 1 || mask_h < 1 || mask_w > width || mask_h > height) {
    throw SynthError("translation mask does not fit in the image");
  }
  // IoU decreases monotonically in d on [0, min(w, h)]; bisect for the
  // last offset whose IoU is still >= target, then pick the closer neighbor.
  int lo = 0;
  int hi = std::min(mask_w, mask_h);
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (diagonal_offset_iou(mask_w, mask_h, mid) >= target_iou) lo = mid; else hi = mid;
  }
  int d = lo;
  if (std::abs(diagonal_offset_iou(mask_w, mask_h, hi) - target_iou) <
      std::abs(diagonal_offset_iou(mask_w, mask_h, lo) - target_iou)) {
    d = hi;
  }
  if (mask_w + d > width || mask_h + d > height) {
    throw SynthError("translation infeasible: masks of " + std::to_string(mask_w) + "x" + std::to_string(mask_h) +
                     " shifted by " + std::to_string(d) + " exceed the frame");
  }
  const int x0 = (width - mask_w - d) / 2;
  const int y0 = (height - mask_h - d) / 2;

  TranslationMasks out;
  out.ref = RegionMask(x0, y0, x0 + mask_w, y0 + mask_h);
  out.test = out.ref.translated(d, d);
  out.offset = d;
  out.iou = diagonal_offset_iou(mask_w, mask_h, d);
  out.gt = GroundTruth2D::identity(width, height);
  out.gt.tx = -d;
  out.gt.ty = -d;
  return out;
}

RotationCase rotation_case(const GrayImage& img, double angle_deg, int margin) {
  if (!(angle_deg >= 0.0 && angle_deg <= 180.0)) throw SynthError("rotation angle must lie in [0, 180]");
  const int w = img.width();
  const int h = img.height();
  RotationCase rc;
  rc.test = warp_rotate(img, angle_deg);
  rc.gt = GroundTruth2D::identity(w, h);
  rc.gt.angle = angle_deg;

  constexpr double kEps = 1e-9;
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Point2 s = rc.gt.apply_inverse({static_cast<double>(x), static_cast<double>(y)});
      const bool inside = s.x >= margin - kEps && s.y >= margin - kEps && s.x <= w - 1 - margin + kEps &&
                          s.y <= h - 1 - margin + kEps;
      bits[static_cast<std::size_t>(y) * w + x] = inside ? 1 : 0;
    }
  }
  rc.valid = RegionMask::full(w, h);
  rc.valid.set_bitmap(w, h, std::move(bits));
  return rc;
}

// ---------------------------------------------------------------------------
// Textures

std::string to_string(TextureKind kind) {
  switch (kind) {
    case TextureKind::kBlobs: return "blobs";
    case TextureKind::kFractalNoise: return "fractal-noise";
    case TextureKind::kSpeckle: return "speckle";
  }
  return "unknown";
}

std::optional<TextureKind> texture_kind_from_string(const std::string& name) {
  if (name == "blobs") return TextureKind::kBlobs;
  if (name == "fractal-noise") return TextureKind::kFractalNoise;
  if (name == "speckle") return TextureKind::kSpeckle;
  return std::nullopt;
}

namespace {

FloatImage white_noise(int w, int h, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  FloatImage img(w, h);
  for (auto& v : img.data()) v = n01(rng);
  return img;
}

void normalize_std(FloatImage& img) {
  const auto& d = img.data();
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(d.size());
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(d.size()));
  for (auto& v : img.data()) v = sd > 0.0 ? (v - mean) / sd : 0.0;
}

// Linear stretch that maps the 0.5th and 99.5th percentiles to 0 and 255.
GrayImage stretch(const FloatImage& img) {
  std::vector<double> sorted = img.data();
  const std::size_t n = sorted.size();
  const std::size_t lo_idx = n / 200;
  const std::size_t hi_idx = n - 1 - n / 200;
  std::nth_element(sorted.begin(), sorted.begin() + lo_idx, sorted.end());
  const double lo = sorted[lo_idx];
  std::nth_element(sorted.begin(), sorted.begin() + hi_idx, sorted.end());
  const double range = sorted[hi_idx] - lo;
  GrayImage out(img.width(), img.height());
  for (std::size_t i = 0; i < n; ++i) {
    out.data()[i] = range > 0.0 ? to_pixel(255.0 * (img.data()[i] - lo) / range) : 128;
  }
  return out;
}

// Band-limited noise summed over octaves. Each band is blurred on a padded
// canvas and cropped so the borders carry no edge-replication artifacts.
FloatImage octave_noise(int w, int h, std::mt19937_64& rng, const std::vector<std::pair<double, double>>& bands) {
  FloatImage acc(w, h);
  for (const auto& [sigma, weight] : bands) {
    const int pad = static_cast<int>(std::ceil(3.0 * sigma));
    const FloatImage padded = gaussian_blur(white_noise(w + 2 * pad, h + 2 * pad, rng), sigma);
    FloatImage layer(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) layer.at(x, y) = padded.at(x + pad, y + pad);
    }
    normalize_std(layer);
    for (std::size_t i = 0; i < acc.data().size(); ++i) acc.data()[i] += weight * layer.data()[i];
  }
  return acc;
}

}  // namespace

GrayImage generate_texture(TextureKind kind, int width, int height, std::uint64_t seed) {
  // Mix the kind into the seed so kinds do not share noise fields.
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(kind) + 1);
  switch (kind) {
    case TextureKind::kFractalNoise:
      return stretch(octave_noise(width, height, rng, {{16.0, 1.0}, {8.0, 1.0}, {4.0, 1.0}, {2.0, 1.0}, {1.0, 0.7}}));
    case TextureKind::kSpeckle:
      return stretch(octave_noise(width, height, rng, {{0.8, 1.0}, {3.0, 0.5}}));
    case TextureKind::kBlobs: {
      FloatImage acc(width, height);
      std::uniform_real_distribution<double> ux(0.0, width);
      std::uniform_real_distribution<double> uy(0.0, height);
      std::uniform_real_distribution<double> usig(1.5, 8.0);
      std::uniform_real_distribution<double> uamp(30.0, 100.0);
      std::bernoulli_distribution sign(0.5);
      const int n_blobs = std::max(1, width * height / 150);
      for (int b = 0; b < n_blobs; ++b) {
        const double cx = ux(rng);
        const double cy = uy(rng);
        const double s = usig(rng);
        const double amp = sign(rng) ? uamp(rng) : -uamp(rng);
        const int r = static_cast<int>(std::ceil(3.0 * s));
        const int xa = std::max(0, static_cast<int>(cx) - r), xb = std::min(width - 1, static_cast<int>(cx) + r);
        const int ya = std::max(0, static_cast<int>(cy) - r), yb = std::min(height - 1, static_cast<int>(cy) + r);
        for (int y = ya; y <= yb; ++y) {
          for (int x = xa; x <= xb; ++x) {
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            acc.at(x, y) += amp * std::exp(-0.5 * d2 / (s * s));
          }
        }
      }
      std::normal_distribution<double> grain(0.0, 6.0);
      for (auto& v : acc.data()) v += grain(rng);
      return stretch(acc);
    }
  }
  throw std::invalid_argument("generate_texture: unknown kind");
}

// ---------------------------------------------------------------------------
// Suites

std::vector<TransformSpec> default_sweep(std::uint64_t noise_seed) {
  std::vector<TransformSpec> specs;
  for (double a : {15.0, 45.0, 90.0, 135.0, 180.0}) specs.push_back({TransformKind::kRotation, a, 0});
  for (double iou : {0.2, 0.4, 0.6, 0.8}) specs.push_back({TransformKind::kTranslation, iou, 0});
  std::uint64_t s = noise_seed;
  for (double sigma : {10.0, 20.0, 30.0, 40.0}) specs.push_back({TransformKind::kNoise, sigma, s++});
  for (double g : {0.1, 0.5, 1.5, 2.2, 3.0}) specs.push_back({TransformKind::kGamma, g, 0});
  return specs;
}

namespace {

void translation_mask_size(int width, int height, double fraction, int& mw, int& mh) {
  mw = std::max(1, static_cast<int>(std::lround(fraction * width)));
  mh = std::max(1, static_cast<int>(std::lround(fraction * height)));
}

}  // namespace

std::vector<SuiteCase> transform_suite(const std::vector<TransformSpec>& specs, int width, int height,
                                       double translation_mask_fraction) {
  std::vector<SuiteCase> cases;
  cases.reserve(specs.size());
  for (const auto& spec : specs) {
    spec.validate();
    SuiteCase c{spec, GroundTruth2D::identity(width, height), RegionMask::full(width, height)};
    if (spec.kind == TransformKind::kRotation) {
      c.gt.angle = spec.parameter;
    } else if (spec.kind == TransformKind::kTranslation) {
      int mw = 0, mh = 0;
      translation_mask_size(width, height, translation_mask_fraction, mw, mh);
      const auto tm = make_translation_masks(width, height, spec.parameter, mw, mh);
      c.gt = tm.gt;
      c.mask = tm.ref;
    }
    cases.push_back(std::move(c));
  }
  return cases;
}

namespace {

RegionMask intersect_rect(const RegionMask& a, const RegionMask& b) {
  return RegionMask(std::max(a.x0(), b.x0()), std::max(a.y0(), b.y0()), std::min(a.x1(), b.x1()),
                    std::min(a.y1(), b.y1()));
}

}  // namespace

EvalPair make_eval_pair(const GrayImage& source, const std::vector<TransformSpec>& specs, const PairOptions& options) {
  const int w = source.width();
  const int h = source.height();
  const RegionMask frame = RegionMask::full(w, h).eroded(options.border);

  EvalPair pair;
  pair.ref = source;
  pair.test = source;
  pair.ref_mask = frame;
  pair.test_mask = frame;
  pair.gt = GroundTruth2D::identity(w, h);
  pair.specs = specs;

  int geometric = 0;
  for (const auto& spec : specs) {
    spec.validate();
    switch (spec.kind) {
      case TransformKind::kRotation: {
        if (++geometric > 1) throw SynthError("at most one geometric transform per pair");
        RotationCase rc = rotation_case(pair.test, spec.parameter);
        pair.test = std::move(rc.test);
        pair.gt = rc.gt;
        pair.test_mask = rc.valid.eroded(options.border);
        break;
      }
      case TransformKind::kTranslation: {
        if (++geometric > 1) throw SynthError("at most one geometric transform per pair");
        int mw = 0, mh = 0;
        translation_mask_size(w, h, options.translation_mask_fraction, mw, mh);
        const auto tm = make_translation_masks(w, h, spec.parameter, mw, mh);
        pair.test = shift_image(pair.test, tm.offset, tm.offset);
        pair.gt = tm.gt;
        pair.ref_mask = intersect_rect(tm.ref, frame);
        pair.test_mask = pair.ref_mask;
        break;
      }
      case TransformKind::kNoise:
        pair.test = apply_noise(pair.test, spec.parameter, spec.seed);
        break;
      case TransformKind::kGamma:
        pair.test = apply_gamma(pair.test, spec.parameter);
        break;
    }
  }
  return pair;
}

}  // namespace gtex
