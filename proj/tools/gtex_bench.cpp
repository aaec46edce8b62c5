// gtex-bench: synthetic fixtures, feature extraction and evaluation reports.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "gtex/bench.hpp"

namespace fs = std::filesystem;
using namespace gtex;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct Options {
  std::string config;
  std::string manifest;
  std::string out;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

RunConfig resolve_config(const Options& o) {
  RunConfig cfg = o.config.empty() ? default_run_config() : load_run_config(o.config);
  if (o.seed) cfg.seeds = {*o.seed};
  if (o.jobs) cfg.jobs = *o.jobs;
  cfg.validate();
  return cfg;
}

ReportFormat resolve_format(const Options& o) {
  const auto f = report_format_from_string(o.format);
  if (!f) throw ConfigError("unknown report format '" + o.format + "' (expected csv or markdown)");
  return *f;
}

fs::path report_path(const Options& o, const RunConfig& cfg, const std::string& stem, ReportFormat f) {
  if (!o.out.empty()) return o.out;
  return cfg.output_dir / (stem + (f == ReportFormat::kCsv ? ".csv" : ".md"));
}

std::vector<PosePairInput> pose_pairs(const Options& o, const RunConfig& cfg) {
  if (!o.manifest.empty()) return pose_inputs_from_manifest(load_manifest(o.manifest));
  return pose_inputs_from_pairs(synthetic_pose_pairs(cfg));
}

GrayImage crop(const GrayImage& img, int x0, int y0, int w, int h) {
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.at(x, y) = img.at(x0 + x, y0 + y);
  }
  return out;
}

// Writes source textures and the pose suite as cropped image pairs plus a
// manifest. Translation pairs are cut at their masks; rotation pairs keep the
// central square that stays valid at every angle.
void synth_gen(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out / "textures");
  fs::create_directories(out / "pairs");
  for (const auto& src : synthetic_sources(cfg)) save_pgm(src.image, out / "textures" / (src.name + ".pgm"));

  PairManifest manifest;
  const auto pairs = synthetic_pose_pairs(cfg);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const EvalPair& p = pairs[i];
    const int w = p.ref.width();
    const int h = p.ref.height();
    GrayImage ref, test;
    GroundTruth2D gt;
    const bool rotated = p.gt.angle != 0.0;
    if (rotated) {
      int side = static_cast<int>(std::floor(std::min(w, h) / std::sqrt(2.0))) - 2 * cfg.pair_options.border;
      if ((w - side) % 2 != 0) --side;
      const int ox = (w - side) / 2;
      const int oy = (h - side) / 2;
      ref = crop(p.ref, ox, oy, side, side);
      test = crop(p.test, ox, oy, side, side);
      gt.angle = p.gt.angle;
    } else {
      const RegionMask& m = p.ref_mask;
      ref = crop(p.ref, m.x0(), m.y0(), m.rect_width(), m.rect_height());
      test = crop(p.test, m.x0(), m.y0(), m.rect_width(), m.rect_height());
      gt.tx = p.gt.tx;
      gt.ty = p.gt.ty;
    }
    const std::string stem = "pair" + std::to_string(i);
    save_pgm(ref, out / "pairs" / (stem + "-ref.pgm"));
    save_pgm(test, out / "pairs" / (stem + "-test.pgm"));
    manifest.rows.push_back({fs::path("pairs") / (stem + "-ref.pgm"), fs::path("pairs") / (stem + "-test.pgm"), gt,
                             "synthetic"});
  }
  save_manifest(manifest, out / "manifest.tsv");
  std::cout << "wrote " << cfg.textures.size() * cfg.seeds.size() << " textures and " << pairs.size()
            << " pairs to " << out.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ground-texture feature pipeline benchmark"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "key = value configuration file");
    sub->add_option("--out", opt.out, "output path");
    sub->add_option("--seed", opt.seed, "texture seed (replaces the configured seed list)");
    sub->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
  };
  auto* gen = app.add_subcommand("synth-gen", "write fixture textures and a synthetic pose-pair manifest");
  add_common(gen);
  auto* det = app.add_subcommand("eval-detect", "repeatability, ambiguity and < N KPs over the transform sweep");
  add_common(det);
  auto* mat = app.add_subcommand("eval-match", "correct matches and precision over the transform sweep");
  add_common(mat);
  auto* pose = app.add_subcommand("eval-pose", "pose success rate on manifest or synthetic pairs");
  add_common(pose);
  pose->add_option("--manifest", opt.manifest, "tab-separated pair manifest");
  auto* ext = app.add_subcommand("extract", "populate the reference feature cache");
  add_common(ext);
  ext->add_option("--manifest", opt.manifest, "tab-separated pair manifest");
  for (auto* sub : {det, mat, pose}) {
    sub->add_option("--format", opt.format, "csv or markdown")->check(CLI::IsMember({"csv", "markdown", "md"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const RunConfig cfg = resolve_config(opt);
    if (gen->parsed()) {
      synth_gen(cfg, opt.out.empty() ? cfg.output_dir : fs::path(opt.out));
    } else if (ext->parsed()) {
      const int n = extract_features(cfg, pose_pairs(opt, cfg));
      std::cout << "wrote " << n << " feature files to " << cfg.cache_dir->string() << '\n';
    } else {
      const ReportFormat format = resolve_format(opt);
      EvalReport report;
      std::string stem;
      if (det->parsed()) {
        report = run_detector_eval(cfg);
        stem = "detection";
      } else if (mat->parsed()) {
        report = run_matching_eval(cfg);
        stem = "matching";
      } else {
        report = run_pose_eval(cfg, pose_pairs(opt, cfg));
        stem = "pose";
      }
      const fs::path path = report_path(opt, cfg, stem, format);
      write_report(report, format, path);
      std::cout << "wrote " << report.rows.size() << " rows to " << path.string() << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const PgmError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
