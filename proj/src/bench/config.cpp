#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "gtex/bench.hpp"

namespace gtex {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  int base = 10;
  std::string digits = v;
  if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
    base = 16;
    digits = digits.substr(2);
  }
  const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), out, base);
  if (res.ec != std::errc() || res.ptr != digits.data() + digits.size()) {
    throw ConfigError("config key '" + key + "': expected an unsigned integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::pair<double, double> to_range(const std::string& key, const std::string& v) {
  const auto items = split_list(v);
  if (items.size() == 1) {
    const double x = to_double(key, items[0]);
    return {x, x};
  }
  if (items.size() != 2) throw ConfigError("config key '" + key + "': expected 'min, max'");
  return {to_double(key, items[0]), to_double(key, items[1])};
}

// "rotation:90", "noise:10@3" (explicit seed); noise without a seed gets
// consecutive seeds starting at 1.
std::vector<TransformSpec> parse_sweep(const std::string& key, const std::string& value) {
  if (trim(value) == "default") return default_sweep();
  std::vector<TransformSpec> specs;
  std::uint64_t next_seed = 1;
  for (const auto& item : split_list(value)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("config key '" + key + "': expected kind:parameter in '" + item + "'");
    const auto kind = transform_kind_from_string(trim(item.substr(0, colon)));
    if (!kind) throw ConfigError("config key '" + key + "': unknown transform '" + item.substr(0, colon) + "'");
    std::string param = trim(item.substr(colon + 1));
    TransformSpec spec{*kind, 0.0, 0};
    const auto at = param.find('@');
    if (at != std::string::npos) {
      spec.seed = to_u64(key, trim(param.substr(at + 1)));
      param = trim(param.substr(0, at));
    } else if (*kind == TransformKind::kNoise) {
      spec.seed = next_seed++;
    }
    spec.parameter = to_double(key, param);
    try {
      spec.validate();
    } catch (const std::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
    specs.push_back(spec);
  }
  return specs;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str());
}

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.detectors = detector_names();
  cfg.selectors = {SelectorConfig{}};
  cfg.descriptors = descriptor_names();
  cfg.sweep = default_sweep();
  cfg.textures = {TextureKind::kBlobs, TextureKind::kFractalNoise, TextureKind::kSpeckle};
  cfg.seeds = {1};
  return cfg;
}

RunConfig run_config_from(const KeyValues& kv, RunConfig cfg) {
  // Selector parameters apply to every selector regardless of key order.
  SelectorConfig selector_params = cfg.selectors.empty() ? SelectorConfig{} : cfg.selectors.front();
  std::optional<std::vector<SelectMethod>> methods;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"detectors",
       [&](const std::string& k, const std::string& v) {
         cfg.detectors = split_list(v);
         for (const auto& d : cfg.detectors) {
           if (!is_detector_name(d)) throw ConfigError("config key '" + k + "': unknown detector '" + d + "'");
         }
       }},
      {"selectors",
       [&](const std::string& k, const std::string& v) {
         methods.emplace();
         for (const auto& s : split_list(v)) {
           const auto m = select_method_from_string(s);
           if (!m) throw ConfigError("config key '" + k + "': unknown selector '" + s + "'");
           methods->push_back(*m);
         }
       }},
      {"descriptors",
       [&](const std::string& k, const std::string& v) {
         cfg.descriptors = split_list(v);
         for (const auto& d : cfg.descriptors) {
           if (!is_descriptor_name(d)) throw ConfigError("config key '" + k + "': unknown descriptor '" + d + "'");
         }
       }},
      {"budget", [&](auto& k, auto& v) { cfg.budget = static_cast<int>(to_int(k, v)); }},
      {"reference_budgets",
       [&](const std::string& k, const std::string& v) {
         cfg.reference_budgets.clear();
         for (const auto& b : split_list(v)) cfg.reference_budgets.push_back(static_cast<int>(to_int(k, b)));
       }},
      {"ratio", [&](auto& k, auto& v) { cfg.ratio = to_double(k, v); }},
      {"ransac_iterations", [&](auto& k, auto& v) { cfg.ransac.iterations = static_cast<int>(to_int(k, v)); }},
      {"ransac_threshold", [&](auto& k, auto& v) { cfg.ransac.inlier_threshold = to_double(k, v); }},
      {"ransac_with_scale", [&](auto& k, auto& v) { cfg.ransac.with_scale = to_bool(k, v); }},
      {"ransac_seed", [&](auto& k, auto& v) { cfg.ransac.seed = to_u64(k, v); }},
      {"ransac_min_inliers", [&](auto& k, auto& v) { cfg.ransac.min_inliers = static_cast<int>(to_int(k, v)); }},
      {"ransac_scale_bounds",
       [&](auto& k, auto& v) {
         const auto [lo, hi] = to_range(k, v);
         cfg.ransac.scale_min = lo;
         cfg.ransac.scale_max = hi;
       }},
      {"iou_threshold", [&](auto& k, auto& v) { cfg.metrics.iou_threshold = to_double(k, v); }},
      {"n_min_keypoints", [&](auto& k, auto& v) { cfg.metrics.n_min_keypoints = static_cast<int>(to_int(k, v)); }},
      {"pos_threshold", [&](auto& k, auto& v) { cfg.metrics.pos_threshold = to_double(k, v); }},
      {"ang_threshold", [&](auto& k, auto& v) { cfg.metrics.ang_threshold = to_double(k, v); }},
      {"pixels_per_mm", [&](auto& k, auto& v) { cfg.metrics.pixels_per_mm = to_double(k, v); }},
      {"corner_sigma", [&](auto& k, auto& v) { cfg.detector.corners.sigma_w = to_double(k, v); }},
      {"harris_k", [&](auto& k, auto& v) { cfg.detector.corners.harris_k = to_double(k, v); }},
      {"harris_threshold", [&](auto& k, auto& v) { cfg.detector.corners.harris_threshold = to_double(k, v); }},
      {"gftt_threshold", [&](auto& k, auto& v) { cfg.detector.corners.min_eigen_threshold = to_double(k, v); }},
      {"fast_threshold", [&](auto& k, auto& v) { cfg.detector.fast.threshold = static_cast<int>(to_int(k, v)); }},
      {"fast_arc", [&](auto& k, auto& v) { cfg.detector.fast.arc = static_cast<int>(to_int(k, v)); }},
      {"censure_scales", [&](auto& k, auto& v) { cfg.detector.censure.n_scales = static_cast<int>(to_int(k, v)); }},
      {"censure_threshold", [&](auto& k, auto& v) { cfg.detector.censure.response_threshold = to_double(k, v); }},
      {"censure_line_threshold", [&](auto& k, auto& v) { cfg.detector.censure.line_threshold = to_double(k, v); }},
      {"dog_octaves", [&](auto& k, auto& v) { cfg.detector.dog.octaves = static_cast<int>(to_int(k, v)); }},
      {"dog_intervals", [&](auto& k, auto& v) { cfg.detector.dog.intervals = static_cast<int>(to_int(k, v)); }},
      {"dog_sigma", [&](auto& k, auto& v) { cfg.detector.dog.sigma0 = to_double(k, v); }},
      {"dog_assumed_blur", [&](auto& k, auto& v) { cfg.detector.dog.assumed_blur = to_double(k, v); }},
      {"dog_contrast", [&](auto& k, auto& v) { cfg.detector.dog.contrast_threshold = to_double(k, v); }},
      {"dog_edge_ratio", [&](auto& k, auto& v) { cfg.detector.dog.edge_ratio = to_double(k, v); }},
      {"dog_refine_steps", [&](auto& k, auto& v) { cfg.detector.dog.max_refine_steps = static_cast<int>(to_int(k, v)); }},
      {"dog_orientation", [&](auto& k, auto& v) { cfg.detector.dog.orientation = to_bool(k, v); }},
      {"brief_seed", [&](auto& k, auto& v) { cfg.describer.brief_seed = to_u64(k, v); }},
      {"latch_seed", [&](auto& k, auto& v) { cfg.describer.latch_seed = to_u64(k, v); }},
      {"descriptor_sigma", [&](auto& k, auto& v) { cfg.describer.smoothing_sigma = to_double(k, v); }},
      {"latch_window", [&](auto& k, auto& v) { cfg.describer.latch_window = static_cast<int>(to_int(k, v)); }},
      {"latch_patch", [&](auto& k, auto& v) { cfg.describer.latch_patch = static_cast<int>(to_int(k, v)); }},
      {"ssc_tolerance", [&](auto& k, auto& v) { selector_params.ssc_tolerance = to_double(k, v); }},
      {"bucket_rows", [&](auto& k, auto& v) { selector_params.grid_rows = static_cast<int>(to_int(k, v)); }},
      {"bucket_cols", [&](auto& k, auto& v) { selector_params.grid_cols = static_cast<int>(to_int(k, v)); }},
      {"bucket_per_cell", [&](auto& k, auto& v) { selector_params.per_cell = static_cast<int>(to_int(k, v)); }},
      {"sweep", [&](auto& k, auto& v) { cfg.sweep = parse_sweep(k, v); }},
      {"textures",
       [&](const std::string& k, const std::string& v) {
         cfg.textures.clear();
         for (const auto& t : split_list(v)) {
           const auto kind = texture_kind_from_string(t);
           if (!kind) throw ConfigError("config key '" + k + "': unknown texture '" + t + "'");
           cfg.textures.push_back(*kind);
         }
       }},
      {"seeds",
       [&](const std::string& k, const std::string& v) {
         cfg.seeds.clear();
         for (const auto& s : split_list(v)) cfg.seeds.push_back(to_u64(k, s));
       }},
      {"image_size", [&](auto& k, auto& v) { cfg.image_size = static_cast<int>(to_int(k, v)); }},
      {"border", [&](auto& k, auto& v) { cfg.pair_options.border = static_cast<int>(to_int(k, v)); }},
      {"translation_mask_fraction",
       [&](auto& k, auto& v) { cfg.pair_options.translation_mask_fraction = to_double(k, v); }},
      {"pose_pairs", [&](auto& k, auto& v) { cfg.pose_suite.pairs = static_cast<int>(to_int(k, v)); }},
      {"pose_mode",
       [&](const std::string& k, const std::string& v) {
         if (v == "translation") {
           cfg.pose_suite.mode = PoseMode::kTranslation;
         } else if (v == "rotation") {
           cfg.pose_suite.mode = PoseMode::kRotation;
         } else {
           throw ConfigError("config key '" + k + "': expected translation or rotation");
         }
       }},
      {"pose_translation_iou",
       [&](auto& k, auto& v) {
         std::tie(cfg.pose_suite.translation_iou_min, cfg.pose_suite.translation_iou_max) = to_range(k, v);
       }},
      {"pose_rotation",
       [&](auto& k, auto& v) { std::tie(cfg.pose_suite.rotation_min, cfg.pose_suite.rotation_max) = to_range(k, v); }},
      {"pose_noise_max", [&](auto& k, auto& v) { cfg.pose_suite.noise_max = to_double(k, v); }},
      {"output_dir", [&](auto&, auto& v) { cfg.output_dir = v; }},
      {"cache_dir",
       [&](auto&, const std::string& v) {
         if (v.empty() || v == "none") {
           cfg.cache_dir.reset();
         } else {
           cfg.cache_dir = v;
         }
       }},
      {"report_timing", [&](auto& k, auto& v) { cfg.report_timing = to_bool(k, v); }},
      {"jobs", [&](auto& k, auto& v) { cfg.jobs = static_cast<int>(to_int(k, v)); }},
  };

  for (const auto& [key, value] : kv) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(key, value);
  }

  std::vector<SelectMethod> chosen;
  if (methods) {
    chosen = *methods;
  } else {
    for (const auto& s : cfg.selectors) chosen.push_back(s.method);
  }
  cfg.selectors.clear();
  for (SelectMethod m : chosen) {
    SelectorConfig s = selector_params;
    s.method = m;
    cfg.selectors.push_back(s);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) { return run_config_from(read_key_values(path)); }

void RunConfig::validate() const {
  auto wrap = [](const auto& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  };
  if (detectors.empty()) throw ConfigError("no detectors configured");
  if (selectors.empty()) throw ConfigError("no selectors configured");
  if (descriptors.empty()) throw ConfigError("no descriptors configured");
  for (const auto& d : detectors) {
    if (!is_detector_name(d)) throw ConfigError("unknown detector '" + d + "'");
  }
  for (const auto& d : descriptors) {
    if (!is_descriptor_name(d)) throw ConfigError("unknown descriptor '" + d + "'");
  }
  if (budget < 1) throw ConfigError("budget must be >= 1");
  for (int b : reference_budgets) {
    if (b < 1) throw ConfigError("reference budgets must be >= 1");
  }
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("ratio must lie in (0, 1]");
  if (textures.empty()) throw ConfigError("no textures configured");
  if (seeds.empty()) throw ConfigError("no seeds configured");
  if (image_size < 64) throw ConfigError("image_size must be >= 64");
  if (pair_options.border < 0 || 2 * pair_options.border >= image_size) throw ConfigError("border out of range");
  if (!(pair_options.translation_mask_fraction > 0.0 && pair_options.translation_mask_fraction <= 1.0)) {
    throw ConfigError("translation_mask_fraction must lie in (0, 1]");
  }
  if (pose_suite.pairs < 0) throw ConfigError("pose_pairs must be >= 0");
  if (pose_suite.translation_iou_min > pose_suite.translation_iou_max ||
      pose_suite.rotation_min > pose_suite.rotation_max) {
    throw ConfigError("pose ranges must be ordered min, max");
  }
  if (pose_suite.noise_max < 0.0) throw ConfigError("pose_noise_max must be >= 0");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  wrap([&] { ransac.validate(); });
  wrap([&] { metrics.validate(); });
  wrap([&] { detector.validate(); });
  wrap([&] { describer.validate(); });
  wrap([&] {
    for (const auto& s : selectors) s.validate();
  });
  wrap([&] {
    for (const auto& s : sweep) s.validate();
  });
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string feature_settings_text(const RunConfig& cfg, const std::string& detector, const SelectorConfig& selector,
                                  int budget, const std::string& descriptor) {
  std::ostringstream os;
  os.precision(17);
  const auto& d = cfg.detector;
  const auto& s = cfg.describer;
  os << "detector=" << detector << ";corners=" << d.corners.sigma_w << ',' << d.corners.harris_k << ','
     << d.corners.harris_threshold << ',' << d.corners.min_eigen_threshold << ";fast=" << d.fast.threshold << ','
     << d.fast.arc << ";censure=" << d.censure.n_scales << ',' << d.censure.response_threshold << ','
     << d.censure.line_threshold << ";dog=" << d.dog.octaves << ',' << d.dog.intervals << ',' << d.dog.sigma0 << ','
     << d.dog.assumed_blur << ',' << d.dog.contrast_threshold << ',' << d.dog.edge_ratio << ','
     << d.dog.max_refine_steps << ',' << d.dog.orientation << ";selector=" << to_string(selector.method) << ','
     << selector.ssc_tolerance << ',' << selector.grid_rows << ',' << selector.grid_cols << ',' << selector.per_cell
     << ";budget=" << budget << ";descriptor=" << descriptor << ';' << s.brief_seed << ',' << s.latch_seed << ','
     << s.smoothing_sigma << ',' << s.latch_window << ',' << s.latch_patch;
  return os.str();
}

}  // namespace gtex
