#include <bit>
#include <cmath>
#include <limits>

#include "gtex/matchpose.hpp"

namespace gtex {

namespace {

// Squared L2 in eight float lanes, abandoned (returns +inf) once the partial
// sum exceeds `bound`. Lane sums only grow, so abandoning never changes which
// candidates end up best or second best.
double real_distance(const Descriptor& a, const Descriptor& b, double bound) {
  if (a.values.size() != b.values.size()) throw MatchError("real descriptors differ in length");
  constexpr std::size_t kLanes = 8;
  constexpr std::size_t kCheck = 32;
  const std::size_t n = a.values.size();
  const float* pa = a.values.data();
  const float* pb = b.values.data();
  float lane[kLanes] = {};
  auto total = [&] {
    double sum = 0.0;
    for (float v : lane) sum += v;
    return sum;
  };
  std::size_t i = 0;
  while (i + kCheck <= n) {
    for (std::size_t end = i + kCheck; i < end; i += kLanes) {
      for (std::size_t j = 0; j < kLanes; ++j) {
        const float d = pa[i + j] - pb[i + j];
        lane[j] += d * d;
      }
    }
    if (total() > bound) return std::numeric_limits<double>::infinity();
  }
  double sum = total();
  for (; i < n; ++i) {
    const double d = static_cast<double>(pa[i]) - pb[i];
    sum += d * d;
  }
  return sum;
}

// Squared L2 for real descriptors keeps the inner loop free of sqrt; the
// ordering is unchanged.
double raw_distance(const Descriptor& a, const Descriptor& b,
                    double bound = std::numeric_limits<double>::infinity()) {
  if (a.kind == DescriptorKind::kBinary) {
    int n = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) n += std::popcount(a.bits[i] ^ b.bits[i]);
    return n;
  }
  return real_distance(a, b, bound);
}

double finish(DescriptorKind kind, double raw) { return kind == DescriptorKind::kReal ? std::sqrt(raw) : raw; }

}  // namespace

double descriptor_distance(const Descriptor& a, const Descriptor& b) {
  if (a.kind != b.kind) throw MatchError("descriptor kind mismatch");
  return finish(a.kind, raw_distance(a, b));
}

std::vector<Match> match_ratio_test(const std::vector<Descriptor>& test, const std::vector<Descriptor>& ref,
                                    double ratio_threshold) {
  std::vector<Match> out;
  if (test.empty() || ref.empty()) return out;
  const DescriptorKind kind = ref.front().kind;
  for (const auto& d : ref) {
    if (d.kind != kind) throw MatchError("descriptor kind mismatch");
  }
  for (const auto& d : test) {
    if (d.kind != kind) throw MatchError("descriptor kind mismatch");
  }
  if (ref.size() < 2) return out;

  for (std::size_t t = 0; t < test.size(); ++t) {
    double best = std::numeric_limits<double>::infinity();
    double second = best;
    int best_idx = -1;
    for (std::size_t r = 0; r < ref.size(); ++r) {
      const double d = raw_distance(test[t], ref[r], second);
      if (d < best) {
        second = best;
        best = d;
        best_idx = static_cast<int>(r);
      } else if (d < second) {
        second = d;
      }
    }
    const double d1 = finish(kind, best);
    const double d2 = finish(kind, second);
    if (!(d2 > 0.0)) continue;
    const double ratio = d1 / d2;
    if (ratio < ratio_threshold) out.push_back({static_cast<int>(t), best_idx, d1, ratio});
  }
  return out;
}

}  // namespace gtex
