#include <algorithm>

#include "gtex/describe.hpp"

namespace gtex {

void DescriberConfig::validate() const {
  if (!(smoothing_sigma > 0.0)) throw DescriptorError("descriptor smoothing sigma must be positive");
  if (latch_patch < 1 || latch_patch % 2 == 0) throw DescriptorError("LATCH patch size must be odd");
  if (latch_window < latch_patch + 2) throw DescriptorError("LATCH window must exceed the patch size");
}

const std::vector<std::string>& descriptor_names() {
  static const std::vector<std::string> names{"brief", "brief-steered", "latch", "gradhist"};
  return names;
}

bool is_descriptor_name(const std::string& name) {
  const auto& n = descriptor_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

DescriptorKind descriptor_kind(const std::string& name) {
  if (!is_descriptor_name(name)) throw DescriptorError("unknown descriptor '" + name + "'");
  return name == "gradhist" ? DescriptorKind::kReal : DescriptorKind::kBinary;
}

bool descriptor_uses_orientation(const std::string& name) { return is_descriptor_name(name) && name != "brief"; }

std::vector<Feature> describe(const std::string& name, const GrayImage& img, const std::vector<Keypoint>& kps,
                              const DescriberConfig& cfg) {
  if (name == "brief" || name == "brief-steered") {
    return describe_brief(img, kps, brief_pattern(cfg.brief_seed), name == "brief-steered", cfg.smoothing_sigma);
  }
  if (name == "latch") {
    return describe_latch(img, kps, latch_pattern(cfg.latch_seed, cfg.latch_window, cfg.latch_patch),
                          cfg.smoothing_sigma);
  }
  if (name == "gradhist") return describe_grad_hist(img, kps);
  throw DescriptorError("unknown descriptor '" + name + "'");
}

}  // namespace gtex
