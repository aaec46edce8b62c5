#include "gtex/select.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace gtex {

std::string to_string(SelectMethod method) {
  switch (method) {
    case SelectMethod::kNms: return "nms";
    case SelectMethod::kSsc: return "ssc";
    case SelectMethod::kBucketing: return "bucketing";
  }
  return "unknown";
}

std::optional<SelectMethod> select_method_from_string(const std::string& name) {
  if (name == "nms") return SelectMethod::kNms;
  if (name == "ssc" || name == "anms") return SelectMethod::kSsc;
  if (name == "bucketing") return SelectMethod::kBucketing;
  return std::nullopt;
}

void SelectorConfig::validate() const {
  if (n_target < 1) throw std::invalid_argument("selector n_target must be >= 1");
  if (!(ssc_tolerance > 0.0 && ssc_tolerance < 1.0)) throw std::invalid_argument("SSC tolerance must lie in (0, 1)");
  if (grid_rows < 1 || grid_cols < 1 || per_cell < 1) throw std::invalid_argument("bucketing grid must be positive");
}

std::vector<Keypoint> select_nms(const std::vector<Keypoint>& kps, int n) {
  std::vector<Keypoint> out = kps;
  const auto keep = static_cast<std::size_t>(std::max(0, n));
  if (out.size() > keep) {
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(keep), out.end(), keypoint_order);
    out.resize(keep);
  } else {
    sort_keypoints(out);
  }
  return out;
}

namespace {

// Greedy square suppression at half-width r over response-ordered input.
std::vector<std::size_t> suppress(const std::vector<Keypoint>& sorted, double r, int width, int height) {
  std::vector<std::size_t> kept;
  if (r <= 0.0) {
    kept.resize(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) kept[i] = i;
    return kept;
  }
  const int cols = std::max(1, static_cast<int>(std::ceil((width + 1) / r)));
  const int rows = std::max(1, static_cast<int>(std::ceil((height + 1) / r)));
  std::vector<std::vector<std::size_t>> grid(static_cast<std::size_t>(cols) * rows);
  auto cell = [&](double v, int limit) { return std::clamp(static_cast<int>(std::floor(v / r)), 0, limit - 1); };
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const Keypoint& kp = sorted[i];
    const int cx = cell(kp.x, cols);
    const int cy = cell(kp.y, rows);
    bool covered = false;
    for (int gy = std::max(0, cy - 1); gy <= std::min(rows - 1, cy + 1) && !covered; ++gy) {
      for (int gx = std::max(0, cx - 1); gx <= std::min(cols - 1, cx + 1) && !covered; ++gx) {
        for (std::size_t j : grid[static_cast<std::size_t>(gy) * cols + gx]) {
          const Keypoint& a = sorted[j];
          if (std::max(std::abs(a.x - kp.x), std::abs(a.y - kp.y)) < r) {
            covered = true;
            break;
          }
        }
      }
    }
    if (covered) continue;
    kept.push_back(i);
    grid[static_cast<std::size_t>(cy) * cols + cx].push_back(i);
  }
  return kept;
}

}  // namespace

SscResult select_ssc(const std::vector<Keypoint>& kps, int n, double tolerance, int width, int height) {
  SscResult result;
  std::vector<Keypoint> sorted = kps;
  sort_keypoints(sorted);
  if (static_cast<int>(sorted.size()) <= n) {
    result.keypoints = std::move(sorted);
    return result;
  }
  const auto upper = static_cast<std::size_t>(std::floor(n * (1.0 + tolerance)));
  const auto lower = static_cast<std::size_t>(n);

  double lo = 1.0;
  double hi = std::max(width, height);
  double best_r = lo;
  std::vector<std::size_t> best;
  std::size_t best_gap = static_cast<std::size_t>(-1);
  auto consider = [&](double r, std::vector<std::size_t> kept) {
    const std::size_t k = kept.size();
    const std::size_t gap = k < lower ? lower - k : (k > upper ? k - upper : 0);
    if (gap < best_gap || (gap == best_gap && r < best_r)) {
      best_gap = gap;
      best_r = r;
      best = std::move(kept);
    }
  };

  auto kept_lo = suppress(sorted, lo, width, height);
  if (kept_lo.size() < lower) {
    // Even the smallest radius suppresses too much (co-located keypoints).
    consider(lo, std::move(kept_lo));
  } else {
    for (int iter = 0; iter < 64 && best_gap != 0; ++iter) {
      const double mid = 0.5 * (lo + hi);
      auto kept = suppress(sorted, mid, width, height);
      const std::size_t k = kept.size();
      consider(mid, std::move(kept));
      if (k > upper) lo = mid; else if (k < lower) hi = mid;
      if (hi - lo < 1e-6) break;
    }
  }
  result.radius = best_r;
  result.converged = best_gap == 0;
  result.keypoints.reserve(best.size());
  for (std::size_t i : best) result.keypoints.push_back(sorted[i]);
  return result;
}

std::vector<Keypoint> select_bucketing(const std::vector<Keypoint>& kps, int rows, int cols, int per_cell, int width,
                                       int height) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("select_bucketing: rows and cols must be >= 1");
  const int cell_w = std::max(1, width / cols);
  const int cell_h = std::max(1, height / rows);
  std::vector<std::vector<Keypoint>> cells(static_cast<std::size_t>(rows) * cols);
  for (const auto& kp : kps) {
    const int c = std::clamp(static_cast<int>(std::floor(kp.x)) / cell_w, 0, cols - 1);
    const int r = std::clamp(static_cast<int>(std::floor(kp.y)) / cell_h, 0, rows - 1);
    cells[static_cast<std::size_t>(r) * cols + c].push_back(kp);
  }
  std::vector<Keypoint> out;
  for (const auto& cell : cells) {
    auto chosen = select_nms(cell, per_cell);
    out.insert(out.end(), chosen.begin(), chosen.end());
  }
  return out;
}

std::vector<Keypoint> select(const std::vector<Keypoint>& kps, const SelectorConfig& cfg, int width, int height) {
  switch (cfg.method) {
    case SelectMethod::kNms: return select_nms(kps, cfg.n_target);
    case SelectMethod::kSsc: return select_ssc(kps, cfg.n_target, cfg.ssc_tolerance, width, height).keypoints;
    case SelectMethod::kBucketing:
      return select_bucketing(kps, cfg.grid_rows, cfg.grid_cols, cfg.per_cell, width, height);
  }
  return kps;
}

}  // namespace gtex
