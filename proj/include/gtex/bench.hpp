#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtex/describe.hpp"
#include "gtex/detect.hpp"
#include "gtex/matchpose.hpp"
#include "gtex/metrics.hpp"
#include "gtex/select.hpp"
#include "gtex/synth.hpp"

namespace gtex {

/// Bad configuration, manifest semantics or CLI usage (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or corrupt input data (exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Configuration

/// Flat `key = value` file. '#' starts a comment; list values are
/// comma-separated. Later assignments override earlier ones.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);

enum class PoseMode { kTranslation, kRotation };

/// Synthetic pose pairs: one geometric transform drawn uniformly from the
/// configured range plus optional noise, cycling over textures and seeds.
struct PoseSuiteConfig {
  int pairs = 30;
  PoseMode mode = PoseMode::kTranslation;
  double translation_iou_min = 0.2;
  double translation_iou_max = 0.8;
  double rotation_min = 90.0;
  double rotation_max = 180.0;
  double noise_max = 10.0;
};

struct RunConfig {
  std::vector<std::string> detectors;
  std::vector<SelectorConfig> selectors;
  std::vector<std::string> descriptors;
  int budget = 1000;
  /// Reference-feature budgets for the map-size sweep; empty disables it.
  std::vector<int> reference_budgets;
  double ratio = 0.7;
  RansacConfig ransac;
  MetricsConfig metrics;
  DetectorConfig detector;
  DescriberConfig describer;
  std::vector<TransformSpec> sweep;
  std::vector<TextureKind> textures;
  std::vector<std::uint64_t> seeds;
  int image_size = 512;
  PairOptions pair_options;
  PoseSuiteConfig pose_suite;
  std::filesystem::path output_dir = ".";
  std::optional<std::filesystem::path> cache_dir;
  bool report_timing = false;
  int jobs = 1;

  void validate() const;
};

/// Defaults: all detectors, NMS, all descriptors, the default sweep, all
/// three textures, seed 1.
RunConfig default_run_config();
/// Applies recognized keys on top of `base`; unknown keys are an error.
RunConfig run_config_from(const KeyValues& kv, RunConfig base = default_run_config());
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical text of every setting that influences extracted features.
std::string feature_settings_text(const RunConfig& cfg, const std::string& detector, const SelectorConfig& selector,
                                  int budget, const std::string& descriptor);
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL);
inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a64(s.data(), s.size(), h);
}

// ---------------------------------------------------------------------------
// Pair manifest

struct PairRow {
  std::filesystem::path ref_path;
  std::filesystem::path test_path;
  /// Reference -> test ground truth; the rotation center is filled in from
  /// the image size at load time.
  std::optional<GroundTruth2D> gt;
  std::string tag;
};

struct PairManifest {
  std::vector<PairRow> rows;
};

/// Tab-separated rows: ref, test, angle_deg, tx, ty, scale, tag. Relative
/// paths resolve against `base_dir`. A first line starting with "ref" is a
/// header; lines starting with '#' are comments.
PairManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir = {});
PairManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const PairManifest& manifest, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Feature cache

struct FeatureFileHeader {
  std::uint32_t version = 1;
  std::string detector;
  std::string descriptor;
  std::uint64_t config_hash = 0;
};

class CacheError : public DataError {
 public:
  enum class Kind { kIo, kVersion, kHashMismatch, kCorrupt };
  CacheError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kFeatureFormatVersion = 1;

/// Written to a temporary file and renamed into place.
void save_features(const std::filesystem::path& path, const FeatureFileHeader& header,
                   const std::vector<Feature>& features);
/// Rejects other versions, a different config hash, and any corruption.
std::vector<Feature> load_features(const std::filesystem::path& path, const FeatureFileHeader& expected);

// ---------------------------------------------------------------------------
// Reports

struct ReportRow {
  std::string experiment;  // detection, matching, pose
  std::string detector;
  std::string selector;
  std::string descriptor;  // "-" for detection rows
  std::string tag;         // transform kind, "all", or manifest tag
  int budget = 0;
  int n_cases = 0;
  std::optional<double> repeatability;
  std::optional<double> ambiguity;
  std::optional<double> below_n;
  std::optional<double> n_correct;
  std::optional<double> precision;
  std::optional<double> success_rate;
  std::optional<double> detect_time;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  bool with_timing = false;
};

enum class ReportFormat { kCsv, kMarkdown };
std::optional<ReportFormat> report_format_from_string(const std::string& name);

std::string format_metric(const std::optional<double>& v);
std::string report_csv(const EvalReport& report);
std::string report_markdown(const EvalReport& report);
void write_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Experiments

/// Reference images of the synthetic suite, one per (texture, seed).
struct SourceImage {
  std::string name;
  GrayImage image;
};
std::vector<SourceImage> synthetic_sources(const RunConfig& cfg);

/// Synthetic pose pairs of the configured pose suite, tagged "synthetic".
std::vector<EvalPair> synthetic_pose_pairs(const RunConfig& cfg);

struct PosePairInput {
  GrayImage ref;
  GrayImage test;
  RegionMask ref_mask;
  RegionMask test_mask;
  GroundTruth2D gt;
  std::string tag;
  std::string name;
};
std::vector<PosePairInput> pose_inputs_from_manifest(const PairManifest& manifest);
std::vector<PosePairInput> pose_inputs_from_pairs(const std::vector<EvalPair>& pairs);

/// Detect, keep keypoints inside the mask, select to the budget.
std::vector<Keypoint> detect_and_select(const std::string& detector, const GrayImage& img, const RegionMask& mask,
                                        const RunConfig& cfg, const SelectorConfig& selector, int budget,
                                        double* seconds = nullptr);

EvalReport run_detector_eval(const RunConfig& cfg);
EvalReport run_matching_eval(const RunConfig& cfg);
EvalReport run_pose_eval(const RunConfig& cfg, const std::vector<PosePairInput>& pairs);

/// Extracts reference features of every pose pair into the cache directory.
/// Returns the number of files written.
int extract_features(const RunConfig& cfg, const std::vector<PosePairInput>& pairs);

/// Runs fn(i) for i in [0, n) on `jobs` threads. Exceptions are rethrown
/// (the one from the lowest index) after all workers finish.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace gtex
