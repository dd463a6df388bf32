#pragma once

#include <span>
#include <vector>

#include "dvis/grid.hpp"

namespace dvis {

struct MeanShiftConfig {
  std::vector<double> bandwidths{0.9, 0.4};
  double epsilon = 1e-3;
  int max_iterations = 100;
  double background_threshold = 1.0;  // pixels with f > threshold are foreground
  std::size_t min_segment_pixels = 20;
  double dedup_iou = 0.95;

  void validate() const;
};

struct MeanShiftResult {
  std::vector<int> assignment;  // per input value, index into modes
  std::vector<double> modes;    // ascending
};

// Flat-kernel mean shift on a 1-D multiset. Each value climbs to the mean of the
// values within `bandwidth` of its current position; converged modes closer
// than bandwidth / 2 are merged.
MeanShiftResult mean_shift_1d(std::span<const double> values, double bandwidth, const MeanShiftConfig& cfg);

struct CandidateSegment {
  BinaryMask mask;  // possibly disconnected
  double mean_value = 0.0;
  double bandwidth = 0.0;
};

// Candidates from every bandwidth, larger bandwidths first; a candidate whose
// mask overlaps an earlier one with IoU >= dedup_iou is dropped.
std::vector<CandidateSegment> discretize(const RealLabelMap& f, const MeanShiftConfig& cfg);

}  // namespace dvis
