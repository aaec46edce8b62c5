#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtex/image.hpp"
#include "gtex/keypoint.hpp"

namespace gtex {

enum class DescriptorKind : std::uint8_t { kBinary = 0, kReal = 1 };

inline constexpr int kBinaryBits = 256;
inline constexpr int kRealLength = 128;

/// Binary descriptors use `bits` (hamming); real ones use `values` (L2).
struct Descriptor {
  DescriptorKind kind = DescriptorKind::kBinary;
  std::array<std::uint64_t, 4> bits{};
  std::vector<float> values;

  bool bit(int i) const { return (bits[i >> 6] >> (i & 63)) & 1u; }
  void set_bit(int i) { bits[i >> 6] |= std::uint64_t{1} << (i & 63); }
  bool operator==(const Descriptor&) const = default;
};

struct Feature {
  Keypoint kp;
  Descriptor desc;
  bool operator==(const Feature&) const = default;
};

class DescriptorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Offset {
  int x = 0;
  int y = 0;
  bool operator==(const Offset&) const = default;
};

struct BriefPattern {
  std::uint64_t seed = 0;
  std::vector<std::array<Offset, 2>> pairs;
};

struct LatchPattern {
  std::uint64_t seed = 0;
  int window = 48;
  int patch = 7;
  /// anchor, first companion, second companion
  std::vector<std::array<Offset, 3>> triplets;
};

inline constexpr int kBriefHalfWidth = 15;

/// 256 pairs with coordinates drawn from N(0, (31/5)^2), rounded and clamped
/// to [-15, 15]. Pairs with coincident points are redrawn.
BriefPattern brief_pattern(std::uint64_t seed);

/// 256 triplets of mini-patch centers, uniform over the positions that keep
/// a patch x patch square inside the window. Points of a triplet are distinct.
LatchPattern latch_pattern(std::uint64_t seed, int window = 48, int patch = 7);

struct DescriberConfig {
  std::uint64_t brief_seed = 0x5eed0001;
  std::uint64_t latch_seed = 0x5eed0002;
  double smoothing_sigma = 2.0;
  int latch_window = 48;
  int latch_patch = 7;

  void validate() const;
};

/// Keypoints whose (rotated) sampling pattern leaves the image are dropped.
std::vector<Feature> describe_brief(const GrayImage& img, const std::vector<Keypoint>& kps, const BriefPattern& pattern,
                                    bool steered, double smoothing_sigma = 2.0);

/// Steered whenever the keypoint carries an angle.
std::vector<Feature> describe_latch(const GrayImage& img, const std::vector<Keypoint>& kps,
                                    const LatchPattern& pattern, double smoothing_sigma = 2.0);

/// 4x4 cells x 8 orientations over a square of half-width 1.5 * size in the
/// keypoint frame. Samples falling outside the image are skipped.
std::vector<Feature> describe_grad_hist(const GrayImage& img, const std::vector<Keypoint>& kps);

const std::vector<std::string>& descriptor_names();
bool is_descriptor_name(const std::string& name);
DescriptorKind descriptor_kind(const std::string& name);
/// True for descriptors whose output depends on the keypoint angle.
bool descriptor_uses_orientation(const std::string& name);

/// Dispatch by name: "brief", "brief-steered", "latch", "gradhist".
std::vector<Feature> describe(const std::string& name, const GrayImage& img, const std::vector<Keypoint>& kps,
                              const DescriberConfig& cfg = {});

}  // namespace gtex
