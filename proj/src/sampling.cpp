#include "dvis/sampling.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <string>

#include "dvis/rng.hpp"

namespace dvis {

void SamplerConfig::validate() const {
  if (window < 3 || window % 2 == 0) throw DomainError("sampler window must be odd and >= 3");
  if (center_radius <= 0 || 2 * center_radius >= window)
    throw DomainError("sampler center_radius must satisfy 0 < c < window/2");
  if (dilation < 1) throw DomainError("sampler dilation must be >= 1");
}

std::vector<Offset> stratified_offsets(const SamplerConfig& cfg) {
  cfg.validate();
  const int reach = (cfg.window - 1) / 2;
  std::set<Offset> out;
  auto emit = [&](int dx, int dy) {
    if (dx > 0 || (dx == 0 && dy > 0)) out.insert({dx, dy});
  };
  emit(1, 0);
  emit(0, 1);
  for (int dy = -cfg.center_radius; dy <= cfg.center_radius; ++dy)
    for (int dx = -cfg.center_radius; dx <= cfg.center_radius; ++dx) emit(dx, dy);
  for (int dy = -reach; dy <= reach; ++dy) {
    if (dy % cfg.dilation != 0) continue;
    for (int dx = -reach; dx <= reach; ++dx)
      if (dx % cfg.dilation == 0) emit(dx, dy);
  }
  return {out.begin(), out.end()};
}

PairList sample_pairs_stratified(const GroundTruthMap& gt, const SamplerConfig& cfg) {
  const auto offsets = stratified_offsets(cfg);
  const int h = gt.height(), w = gt.width();
  PairList list{h, w, {}};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool anchor_fg = gt.ids.at(y, x) > 0;
      for (const Offset& o : offsets) {
        int ny = y + o.dy, nx = x + o.dx;
        if (!gt.ids.contains(ny, nx)) continue;
        if (!anchor_fg && gt.ids.at(ny, nx) == 0) continue;
        list.pairs.push_back({static_cast<std::uint32_t>(gt.ids.index(y, x)),
                              static_cast<std::uint32_t>(gt.ids.index(ny, nx))});
      }
    }
  }
  return list;
}

PairList sample_pairs_random(const GroundTruthMap& gt, const SamplerConfig& cfg) {
  if (cfg.random_pair_count < 1) throw DomainError("random_pair_count must be >= 1");
  std::vector<std::uint32_t> fg;
  for (std::size_t i = 0; i < gt.ids.size(); ++i)
    if (gt.ids.data[i] > 0) fg.push_back(static_cast<std::uint32_t>(i));
  if (fg.empty()) throw DataError("random pair sampling needs at least one foreground pixel");

  // The anchor is drawn from the foreground set so every pair satisfies the
  // foreground rule; only self-pairs are rejected.
  const std::uint64_t total = gt.ids.size();
  const std::uint64_t cap = 100 * static_cast<std::uint64_t>(cfg.random_pair_count);
  PairList list{gt.height(), gt.width(), {}};
  list.pairs.reserve(cfg.random_pair_count);
  for (std::uint64_t attempt = 0; list.pairs.size() < cfg.random_pair_count; ++attempt) {
    if (attempt >= cap)
      throw DataError("random pair sampling exceeded " + std::to_string(cap) + " attempts");
    std::uint32_t a = fg[counter_hash(cfg.seed, 1, attempt) % fg.size()];
    std::uint32_t b = static_cast<std::uint32_t>(counter_hash(cfg.seed, 2, attempt) % total);
    if (a == b) continue;
    list.pairs.push_back({a, b});
  }
  return list;
}

PairList sample_pairs(const GroundTruthMap& gt, const SamplerConfig& cfg) {
  return cfg.mode == SamplingMode::stratified ? sample_pairs_stratified(gt, cfg) : sample_pairs_random(gt, cfg);
}

}  // namespace dvis
