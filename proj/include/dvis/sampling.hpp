#pragma once

#include <cstdint>
#include <vector>

#include "dvis/grid.hpp"

namespace dvis {

enum class SamplingMode { stratified, random };

// Pair sampling for the permutation-invariant term. Distances are in
// prediction-resolution pixels.
struct SamplerConfig {
  int window = 129;       // odd; pairs reach at most (window - 1) / 2 in Chebyshev distance
  int center_radius = 8;  // dense sampling radius
  int dilation = 8;       // stride of the sparse outer lattice
  SamplingMode mode = SamplingMode::stratified;
  std::size_t random_pair_count = 4096;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Offset {
  int dx = 0;
  int dy = 0;
  bool operator==(const Offset&) const = default;
  auto operator<=>(const Offset&) const = default;
};

// Flat row-major pixel indices of the two endpoints.
struct PixelPair {
  std::uint32_t first = 0;
  std::uint32_t second = 0;
  bool operator==(const PixelPair&) const = default;
};

struct PairList {
  int height = 0;
  int width = 0;
  std::vector<PixelPair> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
  bool operator==(const PairList&) const = default;
};

// Half-plane offsets (dx > 0, or dx == 0 and dy > 0), sorted by (dx, dy).
std::vector<Offset> stratified_offsets(const SamplerConfig& cfg);

PairList sample_pairs_stratified(const GroundTruthMap& gt, const SamplerConfig& cfg);

// Throws DataError when the map has no foreground or the attempt cap is hit.
PairList sample_pairs_random(const GroundTruthMap& gt, const SamplerConfig& cfg);

// Dispatches on cfg.mode.
PairList sample_pairs(const GroundTruthMap& gt, const SamplerConfig& cfg);

}  // namespace dvis
