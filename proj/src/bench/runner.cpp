#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>
#include <random>
#include <thread>

#include "gtex/bench.hpp"

namespace gtex {

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, n);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

// Running mean over defined values.
struct Mean {
  double sum = 0.0;
  int n = 0;
  void add(const std::optional<double>& v) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  std::optional<double> value() const {
    if (n == 0) return std::nullopt;
    return sum / n;
  }
};

struct CaseMetrics {
  std::optional<double> repeatability;
  std::optional<double> ambiguity;
  std::optional<double> below_n;
  std::optional<double> n_correct;
  std::optional<double> precision;
  std::optional<double> success;
  std::optional<double> time;
};

struct Aggregate {
  Mean repeatability, ambiguity, below_n, n_correct, precision, success, time;
  int cases = 0;
  void add(const CaseMetrics& m) {
    repeatability.add(m.repeatability);
    ambiguity.add(m.ambiguity);
    below_n.add(m.below_n);
    n_correct.add(m.n_correct);
    precision.add(m.precision);
    success.add(m.success);
    time.add(m.time);
    ++cases;
  }
  void add_means(const Aggregate& other) {
    repeatability.add(other.repeatability.value());
    ambiguity.add(other.ambiguity.value());
    below_n.add(other.below_n.value());
    n_correct.add(other.n_correct.value());
    precision.add(other.precision.value());
    success.add(other.success.value());
    time.add(other.time.value());
    cases += other.cases;
  }
  void fill(ReportRow& row) const {
    row.n_cases = cases;
    row.repeatability = repeatability.value();
    row.ambiguity = ambiguity.value();
    row.below_n = below_n.value();
    row.n_correct = n_correct.value();
    row.precision = precision.value();
    row.success_rate = success.value();
    row.detect_time = time.value();
  }
};

ReportRow make_row(const std::string& experiment, const std::string& detector, const std::string& selector,
                   const std::string& descriptor, const std::string& tag, int budget) {
  ReportRow row;
  row.experiment = experiment;
  row.detector = detector;
  row.selector = selector;
  row.descriptor = descriptor;
  row.tag = tag;
  row.budget = budget;
  return row;
}

std::vector<Keypoint> filter_mask(const std::vector<Keypoint>& kps, const RegionMask& mask) {
  std::vector<Keypoint> out;
  out.reserve(kps.size());
  for (const auto& kp : kps) {
    if (mask.contains(kp.x, kp.y)) out.push_back(kp);
  }
  return out;
}

// The bucketing grid fixes its own count; other budgets scale its per-cell
// quota proportionally.
SelectorConfig selector_for_budget(const SelectorConfig& selector, int budget, int main_budget) {
  SelectorConfig s = selector;
  s.n_target = budget;
  if (s.method == SelectMethod::kBucketing && budget != main_budget) {
    s.per_cell = std::max(1, static_cast<int>(std::ceil(static_cast<double>(selector.per_cell) * budget / main_budget)));
  }
  return s;
}

std::vector<Keypoint> select_in_mask(const std::vector<Keypoint>& raw, const RegionMask& mask,
                                     const SelectorConfig& selector, int budget, int main_budget, int width,
                                     int height) {
  auto kps = select(filter_mask(raw, mask), selector_for_budget(selector, budget, main_budget), width, height);
  // Scaled bucketing keeps at least one keypoint per cell, which overshoots
  // small swept budgets; trim back by response.
  if (budget != main_budget && static_cast<int>(kps.size()) > budget) kps = select_nms(kps, budget);
  return kps;
}

struct Timed {
  std::vector<Keypoint> kps;
  double seconds = 0.0;
};

Timed timed_detect(const std::string& detector, const GrayImage& img, const DetectorConfig& dc) {
  const auto t0 = std::chrono::steady_clock::now();
  Timed t;
  t.kps = detect(detector, img, dc);
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return t;
}

std::vector<Keypoint> keypoints_of(const std::vector<Feature>& f) {
  std::vector<Keypoint> out;
  out.reserve(f.size());
  for (const auto& x : f) out.push_back(x.kp);
  return out;
}

std::vector<Descriptor> descriptors_of(const std::vector<Feature>& f) {
  std::vector<Descriptor> out;
  out.reserve(f.size());
  for (const auto& x : f) out.push_back(x.desc);
  return out;
}

// Order-stable list of transform kinds appearing in the sweep.
std::vector<TransformKind> sweep_kinds(const std::vector<TransformSpec>& sweep) {
  std::vector<TransformKind> kinds;
  for (const auto& s : sweep) {
    if (std::find(kinds.begin(), kinds.end(), s.kind) == kinds.end()) kinds.push_back(s.kind);
  }
  return kinds;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a * 0x9E3779B97F4A7C15ULL ^ (b + 0x632BE59BD9B4E019ULL);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Case results for the synthetic sweep, indexed [source][case][detector]
// [selector][descriptor]; detection runs use a single descriptor slot.
using CaseGrid = std::vector<std::vector<std::vector<std::vector<std::vector<CaseMetrics>>>>>;

EvalReport aggregate_sweep(const RunConfig& cfg, const CaseGrid& grid, const std::string& experiment,
                           const std::vector<std::string>& descriptor_labels) {
  EvalReport report;
  report.with_timing = cfg.report_timing && experiment == "detection";
  const auto kinds = sweep_kinds(cfg.sweep);
  for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
    for (std::size_t s = 0; s < cfg.selectors.size(); ++s) {
      for (std::size_t k = 0; k < descriptor_labels.size(); ++k) {
        Aggregate overall;
        std::vector<ReportRow> kind_rows;
        for (TransformKind kind : kinds) {
          Aggregate agg;
          for (std::size_t src = 0; src < grid.size(); ++src) {
            for (std::size_t c = 0; c < cfg.sweep.size(); ++c) {
              if (cfg.sweep[c].kind == kind) agg.add(grid[src][c][d][s][k]);
            }
          }
          overall.add_means(agg);
          ReportRow row = make_row(experiment, cfg.detectors[d], to_string(cfg.selectors[s].method), descriptor_labels[k],
                        to_string(kind), cfg.budget);
          agg.fill(row);
          kind_rows.push_back(std::move(row));
        }
        ReportRow all = make_row(experiment, cfg.detectors[d], to_string(cfg.selectors[s].method), descriptor_labels[k], "all",
                      cfg.budget);
        overall.fill(all);
        report.rows.push_back(std::move(all));
        for (auto& r : kind_rows) report.rows.push_back(std::move(r));
      }
    }
  }
  return report;
}

CaseGrid make_grid(std::size_t sources, std::size_t cases, std::size_t detectors, std::size_t selectors,
                   std::size_t descriptors) {
  return CaseGrid(sources,
                  std::vector(cases, std::vector(detectors, std::vector(selectors, std::vector<CaseMetrics>(descriptors)))));
}

// Raw detections on every source image, [source][detector].
std::vector<std::vector<std::vector<Keypoint>>> detect_sources(const RunConfig& cfg,
                                                               const std::vector<SourceImage>& sources) {
  std::vector<std::vector<std::vector<Keypoint>>> out(sources.size(),
                                                      std::vector<std::vector<Keypoint>>(cfg.detectors.size()));
  const int n = static_cast<int>(sources.size() * cfg.detectors.size());
  parallel_for(n, cfg.jobs, [&](int i) {
    const std::size_t s = static_cast<std::size_t>(i) / cfg.detectors.size();
    const std::size_t d = static_cast<std::size_t>(i) % cfg.detectors.size();
    out[s][d] = detect(cfg.detectors[d], sources[s].image, cfg.detector);
  });
  return out;
}

}  // namespace

std::vector<SourceImage> synthetic_sources(const RunConfig& cfg) {
  std::vector<SourceImage> out;
  for (TextureKind kind : cfg.textures) {
    for (std::uint64_t seed : cfg.seeds) {
      out.push_back({to_string(kind) + "-" + std::to_string(seed),
                     generate_texture(kind, cfg.image_size, cfg.image_size, seed)});
    }
  }
  return out;
}

std::vector<Keypoint> detect_and_select(const std::string& detector, const GrayImage& img, const RegionMask& mask,
                                        const RunConfig& cfg, const SelectorConfig& selector, int budget,
                                        double* seconds) {
  DetectorConfig dc = cfg.detector;
  dc.mask = mask;
  const Timed t = timed_detect(detector, img, dc);
  if (seconds) *seconds = t.seconds;
  return select_in_mask(t.kps, mask, selector, budget, cfg.budget, img.width(), img.height());
}

EvalReport run_detector_eval(const RunConfig& cfg) {
  cfg.validate();
  const auto sources = synthetic_sources(cfg);
  const auto ref_raw = detect_sources(cfg, sources);
  CaseGrid grid = make_grid(sources.size(), cfg.sweep.size(), cfg.detectors.size(), cfg.selectors.size(), 1);
  const int n = static_cast<int>(sources.size() * cfg.sweep.size());
  const int size = cfg.image_size;

  parallel_for(n, cfg.jobs, [&](int i) {
    const std::size_t src = static_cast<std::size_t>(i) / cfg.sweep.size();
    const std::size_t c = static_cast<std::size_t>(i) % cfg.sweep.size();
    const EvalPair pair = make_eval_pair(sources[src].image, {cfg.sweep[c]}, cfg.pair_options);
    for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
      const Timed test_raw = timed_detect(cfg.detectors[d], pair.test, cfg.detector);
      for (std::size_t s = 0; s < cfg.selectors.size(); ++s) {
        const auto& sel = cfg.selectors[s];
        const auto ref = select_in_mask(ref_raw[src][d], pair.ref_mask, sel, cfg.budget, cfg.budget, size, size);
        const auto test = select_in_mask(test_raw.kps, pair.test_mask, sel, cfg.budget, cfg.budget, size, size);
        const DetectionScore score =
            repeatability_and_ambiguity(ref, test, pair.gt, pair.ref_mask, pair.test_mask, cfg.metrics);
        CaseMetrics& m = grid[src][c][d][s][0];
        m.repeatability = score.repeatability;
        m.ambiguity = score.ambiguity;
        m.below_n = score.below_n ? 1.0 : 0.0;
        m.time = test_raw.seconds;
      }
    }
  });
  return aggregate_sweep(cfg, grid, "detection", {"-"});
}

EvalReport run_matching_eval(const RunConfig& cfg) {
  cfg.validate();
  const auto sources = synthetic_sources(cfg);
  const auto ref_raw = detect_sources(cfg, sources);
  CaseGrid grid = make_grid(sources.size(), cfg.sweep.size(), cfg.detectors.size(), cfg.selectors.size(),
                            cfg.descriptors.size());
  const int n = static_cast<int>(sources.size() * cfg.sweep.size());
  const int size = cfg.image_size;

  parallel_for(n, cfg.jobs, [&](int i) {
    const std::size_t src = static_cast<std::size_t>(i) / cfg.sweep.size();
    const std::size_t c = static_cast<std::size_t>(i) % cfg.sweep.size();
    const EvalPair pair = make_eval_pair(sources[src].image, {cfg.sweep[c]}, cfg.pair_options);
    for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
      const auto test_raw = detect(cfg.detectors[d], pair.test, cfg.detector);
      for (std::size_t s = 0; s < cfg.selectors.size(); ++s) {
        const auto& sel = cfg.selectors[s];
        const auto ref = select_in_mask(ref_raw[src][d], pair.ref_mask, sel, cfg.budget, cfg.budget, size, size);
        const auto test = select_in_mask(test_raw, pair.test_mask, sel, cfg.budget, cfg.budget, size, size);
        for (std::size_t k = 0; k < cfg.descriptors.size(); ++k) {
          const auto ref_f = describe(cfg.descriptors[k], pair.ref, ref, cfg.describer);
          const auto test_f = describe(cfg.descriptors[k], pair.test, test, cfg.describer);
          const auto matches = match_ratio_test(descriptors_of(test_f), descriptors_of(ref_f), cfg.ratio);
          const MatchScore ms =
              match_correctness(matches, keypoints_of(test_f), keypoints_of(ref_f), pair.gt, cfg.metrics);
          CaseMetrics& m = grid[src][c][d][s][k];
          m.n_correct = ms.n_correct;
          m.precision = ms.precision;
        }
      }
    }
  });
  return aggregate_sweep(cfg, grid, "matching", cfg.descriptors);
}

std::vector<EvalPair> synthetic_pose_pairs(const RunConfig& cfg) {
  cfg.validate();
  const auto& ps = cfg.pose_suite;
  std::vector<EvalPair> pairs;
  pairs.reserve(static_cast<std::size_t>(ps.pairs));
  const std::size_t n_tex = cfg.textures.size();
  for (int i = 0; i < ps.pairs; ++i) {
    const std::uint64_t base = cfg.seeds[(static_cast<std::size_t>(i) / n_tex) % cfg.seeds.size()];
    std::mt19937_64 rng(mix_seed(base, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const TextureKind kind = cfg.textures[static_cast<std::size_t>(i) % n_tex];
    const GrayImage source = generate_texture(kind, cfg.image_size, cfg.image_size, rng());
    std::vector<TransformSpec> specs;
    if (ps.mode == PoseMode::kTranslation) {
      const double iou = ps.translation_iou_min + (ps.translation_iou_max - ps.translation_iou_min) * unit(rng);
      specs.push_back({TransformKind::kTranslation, iou, 0});
    } else {
      const double angle = ps.rotation_min + (ps.rotation_max - ps.rotation_min) * unit(rng);
      specs.push_back({TransformKind::kRotation, angle, 0});
    }
    const double sigma = ps.noise_max * unit(rng);
    const std::uint64_t noise_seed = rng();
    if (sigma > 0.0) specs.push_back({TransformKind::kNoise, sigma, noise_seed});
    pairs.push_back(make_eval_pair(source, specs, cfg.pair_options));
  }
  return pairs;
}

std::vector<PosePairInput> pose_inputs_from_pairs(const std::vector<EvalPair>& pairs) {
  std::vector<PosePairInput> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    out.push_back({p.ref, p.test, p.ref_mask, p.test_mask, p.gt, "synthetic", "synthetic-" + std::to_string(i)});
  }
  return out;
}

std::vector<PosePairInput> pose_inputs_from_manifest(const PairManifest& manifest) {
  std::vector<PosePairInput> out;
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    const auto& row = manifest.rows[i];
    if (!row.gt) throw ConfigError("manifest row " + std::to_string(i + 1) + " has no ground truth");
    PosePairInput in;
    try {
      in.ref = load_pgm(row.ref_path);
      in.test = load_pgm(row.test_path);
    } catch (const PgmError& e) {
      throw DataError(e.what());
    }
    if (in.ref.width() != in.test.width() || in.ref.height() != in.test.height()) {
      throw DataError("manifest row " + std::to_string(i + 1) + ": reference and test sizes differ");
    }
    in.gt = *row.gt;
    in.gt.cx = 0.5 * (in.ref.width() - 1);
    in.gt.cy = 0.5 * (in.ref.height() - 1);
    in.ref_mask = RegionMask::full(in.ref.width(), in.ref.height());
    in.test_mask = in.ref_mask;
    in.tag = row.tag;
    in.name = "row" + std::to_string(i + 1);
    out.push_back(std::move(in));
  }
  return out;
}

namespace {

std::uint64_t image_hash(const GrayImage& img, const RegionMask& mask) {
  std::uint64_t h = fnv1a64(img.data().data(), img.data().size());
  const int dims[6] = {img.width(), img.height(), mask.x0(), mask.y0(), mask.x1(), mask.y1()};
  h = fnv1a64(dims, sizeof dims, h);
  if (mask.has_bitmap()) h = fnv1a64(mask.bitmap().data(), mask.bitmap().size(), h);
  return h;
}

struct RefFeatureKey {
  std::filesystem::path path;
  FeatureFileHeader header;
};

RefFeatureKey ref_feature_key(const RunConfig& cfg, const PosePairInput& pair, const std::string& detector,
                              const SelectorConfig& sel, int budget, const std::string& descriptor) {
  RefFeatureKey key;
  key.header.version = kFeatureFormatVersion;
  key.header.detector = detector;
  key.header.descriptor = descriptor;
  key.header.config_hash =
      fnv1a64(feature_settings_text(cfg, detector, sel, budget, descriptor), image_hash(pair.ref, pair.ref_mask));
  key.path = *cfg.cache_dir / (pair.name + "." + detector + "." + to_string(sel.method) + "." + descriptor + ".b" +
                               std::to_string(budget) + ".feat");
  return key;
}

std::vector<Feature> compute_ref_features(const RunConfig& cfg, const PosePairInput& pair,
                                          const std::vector<Keypoint>& raw, const SelectorConfig& sel, int budget,
                                          const std::string& descriptor) {
  const auto kps =
      select_in_mask(raw, pair.ref_mask, sel, budget, cfg.budget, pair.ref.width(), pair.ref.height());
  return describe(descriptor, pair.ref, kps, cfg.describer);
}

// Cached when a cache directory is configured; stale or damaged entries are
// recomputed and replaced.
std::vector<Feature> ref_features(const RunConfig& cfg, const PosePairInput& pair, const std::vector<Keypoint>& raw,
                                  const std::string& detector, const SelectorConfig& sel, int budget,
                                  const std::string& descriptor) {
  if (!cfg.cache_dir) return compute_ref_features(cfg, pair, raw, sel, budget, descriptor);
  const RefFeatureKey key = ref_feature_key(cfg, pair, detector, sel, budget, descriptor);
  if (std::filesystem::exists(key.path)) {
    try {
      return load_features(key.path, key.header);
    } catch (const CacheError& e) {
      std::cerr << "warning: " << e.what() << "; recomputing\n";
    }
  }
  auto features = compute_ref_features(cfg, pair, raw, sel, budget, descriptor);
  save_features(key.path, key.header, features);
  return features;
}

std::vector<int> all_reference_budgets(const RunConfig& cfg) {
  std::vector<int> budgets{cfg.budget};
  for (int b : cfg.reference_budgets) {
    if (std::find(budgets.begin(), budgets.end(), b) == budgets.end()) budgets.push_back(b);
  }
  return budgets;
}

}  // namespace

EvalReport run_pose_eval(const RunConfig& cfg, const std::vector<PosePairInput>& pairs) {
  cfg.validate();
  const std::vector<int> budgets = all_reference_budgets(cfg);
  const std::size_t nd = cfg.detectors.size(), ns = cfg.selectors.size(), nk = cfg.descriptors.size();
  const std::size_t nb = budgets.size();
  // [pair][detector][selector][descriptor][budget]
  std::vector<CaseMetrics> results(pairs.size() * nd * ns * nk * nb);
  auto at = [&](std::size_t p, std::size_t d, std::size_t s, std::size_t k, std::size_t b) -> CaseMetrics& {
    return results[(((p * nd + d) * ns + s) * nk + k) * nb + b];
  };

  parallel_for(static_cast<int>(pairs.size()), cfg.jobs, [&](int pi) {
    const PosePairInput& pair = pairs[pi];
    RansacConfig rc = cfg.ransac;
    rc.seed = mix_seed(cfg.ransac.seed, static_cast<std::uint64_t>(pi));
    for (std::size_t d = 0; d < nd; ++d) {
      const auto ref_raw = detect(cfg.detectors[d], pair.ref, cfg.detector);
      const auto test_raw = detect(cfg.detectors[d], pair.test, cfg.detector);
      for (std::size_t s = 0; s < ns; ++s) {
        const auto& sel = cfg.selectors[s];
        const auto test_kps = select_in_mask(test_raw, pair.test_mask, sel, cfg.budget, cfg.budget,
                                             pair.test.width(), pair.test.height());
        for (std::size_t k = 0; k < nk; ++k) {
          const auto test_f = describe(cfg.descriptors[k], pair.test, test_kps, cfg.describer);
          const auto test_desc = descriptors_of(test_f);
          const auto test_pts = keypoints_of(test_f);
          for (std::size_t b = 0; b < nb; ++b) {
            const auto ref_f = ref_features(cfg, pair, ref_raw, cfg.detectors[d], sel, budgets[b], cfg.descriptors[k]);
            const auto ref_pts = keypoints_of(ref_f);
            const auto matches = match_ratio_test(test_desc, descriptors_of(ref_f), cfg.ratio);
            const auto est = ransac_pose(matches, test_pts, ref_pts, rc);
            const MatchScore ms = match_correctness(matches, test_pts, ref_pts, pair.gt, cfg.metrics);
            CaseMetrics& m = at(static_cast<std::size_t>(pi), d, s, k, b);
            m.n_correct = ms.n_correct;
            m.precision = ms.precision;
            m.success = pose_success(est ? std::optional<Pose2D>(est->pose) : std::nullopt, pair.gt, cfg.metrics)
                            ? 1.0
                            : 0.0;
          }
        }
      }
    }
  });

  std::vector<std::string> tags;
  for (const auto& p : pairs) {
    if (std::find(tags.begin(), tags.end(), p.tag) == tags.end()) tags.push_back(p.tag);
  }
  EvalReport report;
  auto emit = [&](const std::string& experiment, std::size_t b) {
    for (std::size_t d = 0; d < nd; ++d) {
      for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t k = 0; k < nk; ++k) {
          for (const auto& tag : tags) {
            Aggregate agg;
            for (std::size_t p = 0; p < pairs.size(); ++p) {
              if (pairs[p].tag == tag) agg.add(at(p, d, s, k, b));
            }
            ReportRow row = make_row(experiment, cfg.detectors[d], to_string(cfg.selectors[s].method), cfg.descriptors[k], tag,
                          budgets[b]);
            agg.fill(row);
            report.rows.push_back(std::move(row));
          }
        }
      }
    }
  };
  emit("pose", 0);
  if (!cfg.reference_budgets.empty()) {
    // Sweep rows in the configured budget order.
    for (int budget : cfg.reference_budgets) {
      const auto it = std::find(budgets.begin(), budgets.end(), budget);
      emit("pose-budget", static_cast<std::size_t>(it - budgets.begin()));
    }
  }
  return report;
}

int extract_features(const RunConfig& cfg, const std::vector<PosePairInput>& pairs) {
  cfg.validate();
  if (!cfg.cache_dir) throw ConfigError("extract requires cache_dir to be set");
  const std::vector<int> budgets = all_reference_budgets(cfg);
  std::atomic<int> written{0};
  parallel_for(static_cast<int>(pairs.size()), cfg.jobs, [&](int pi) {
    const PosePairInput& pair = pairs[pi];
    for (const auto& det : cfg.detectors) {
      const auto raw = detect(det, pair.ref, cfg.detector);
      for (const auto& sel : cfg.selectors) {
        for (const auto& desc : cfg.descriptors) {
          for (int b : budgets) {
            const RefFeatureKey key = ref_feature_key(cfg, pair, det, sel, b, desc);
            save_features(key.path, key.header, compute_ref_features(cfg, pair, raw, sel, b, desc));
            ++written;
          }
        }
      }
    }
  });
  return written;
}

}  // namespace gtex
