#include "dvis/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "dvis/metrics.hpp"

namespace dvis {

void MeanShiftConfig::validate() const {
  if (bandwidths.empty()) throw DomainError("mean shift needs at least one bandwidth");
  for (double b : bandwidths)
    if (!(b > 0.0)) throw DomainError("bandwidths must be > 0");
  if (!(epsilon > 0.0)) throw DomainError("mean shift epsilon must be > 0");
  if (max_iterations < 1) throw DomainError("max_iterations must be >= 1");
  if (!(dedup_iou > 0.0) || dedup_iou > 1.0) throw DomainError("dedup_iou must be in (0, 1]");
}

MeanShiftResult mean_shift_1d(std::span<const double> values, double bandwidth, const MeanShiftConfig& cfg) {
  MeanShiftResult out;
  if (values.empty()) return out;
  if (!(bandwidth > 0.0)) throw DomainError("bandwidth must be > 0");

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> prefix(sorted.size() + 1, 0.0);
  for (std::size_t i = 0; i < sorted.size(); ++i) prefix[i + 1] = prefix[i] + sorted[i];

  auto window_mean = [&](double center) {
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), center - bandwidth);
    auto hi = std::upper_bound(sorted.begin(), sorted.end(), center + bandwidth);
    const auto a = static_cast<std::size_t>(lo - sorted.begin());
    const auto b = static_cast<std::size_t>(hi - sorted.begin());
    if (a == b) return center;
    return (prefix[b] - prefix[a]) / static_cast<double>(b - a);
  };

  // Climb once per distinct value.
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> converged(distinct.size());
  for (std::size_t i = 0; i < distinct.size(); ++i) {
    double mode = distinct[i];
    for (int it = 0; it < cfg.max_iterations; ++it) {
      const double next = window_mean(mode);
      const double shift = std::abs(next - mode);
      mode = next;
      if (shift < cfg.epsilon) break;
    }
    converged[i] = mode;
  }

  // Chain-merge converged modes closer than bandwidth / 2.
  std::vector<std::size_t> order(distinct.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return converged[a] < converged[b]; });
  std::vector<int> group_of(distinct.size(), 0);
  std::vector<double> sums, counts;
  int group = -1;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    if (k == 0 || converged[i] - converged[order[k - 1]] >= bandwidth / 2.0) {
      ++group;
      sums.push_back(0.0);
      counts.push_back(0.0);
    }
    group_of[i] = group;
    sums[group] += converged[i];
    counts[group] += 1.0;
  }
  for (std::size_t g = 0; g < sums.size(); ++g) out.modes.push_back(sums[g] / counts[g]);

  out.assignment.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto pos = std::lower_bound(distinct.begin(), distinct.end(), values[i]) - distinct.begin();
    out.assignment[i] = group_of[static_cast<std::size_t>(pos)];
  }
  return out;
}

std::vector<CandidateSegment> discretize(const RealLabelMap& f, const MeanShiftConfig& cfg) {
  cfg.validate();
  std::vector<std::size_t> fg;
  std::vector<double> values;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.data[i] > cfg.background_threshold) {
      fg.push_back(i);
      values.push_back(f.data[i]);
    }
  }
  std::vector<CandidateSegment> kept;
  if (fg.empty()) return kept;

  std::vector<double> bandwidths = cfg.bandwidths;
  std::stable_sort(bandwidths.begin(), bandwidths.end(), std::greater<>());

  for (double bw : bandwidths) {
    const auto ms = mean_shift_1d(values, bw, cfg);
    const std::size_t clusters = ms.modes.size();
    std::vector<CandidateSegment> segs(clusters);
    std::vector<double> sums(clusters, 0.0);
    std::vector<std::size_t> counts(clusters, 0);
    for (auto& s : segs) {
      s.mask = BinaryMask(f.height, f.width, 0);
      s.bandwidth = bw;
    }
    for (std::size_t k = 0; k < fg.size(); ++k) {
      const auto c = static_cast<std::size_t>(ms.assignment[k]);
      segs[c].mask.data[fg[k]] = 1;
      sums[c] += values[k];
      ++counts[c];
    }
    const std::size_t earlier = kept.size();
    for (std::size_t c = 0; c < clusters; ++c) {
      if (counts[c] < cfg.min_segment_pixels) continue;
      segs[c].mean_value = sums[c] / static_cast<double>(counts[c]);
      bool duplicate = false;
      for (std::size_t j = 0; j < earlier && !duplicate; ++j)
        duplicate = mask_iou(kept[j].mask, segs[c].mask) >= cfg.dedup_iou;
      if (!duplicate) kept.push_back(std::move(segs[c]));
    }
  }
  return kept;
}

}  // namespace dvis
