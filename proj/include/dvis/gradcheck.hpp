#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dvis/losses.hpp"

namespace dvis {

struct GradcheckConfig {
  int points = 100;         // checked coordinates per loss term
  double step = 1e-4;       // central-difference step for loss terms
  double tolerance = 1e-4;  // max relative error for loss terms
  int net_params = 50;
  double net_step = 1e-3;
  double net_tolerance = 1e-3;
  int map_size = 8;         // loss-term maps are map_size x map_size
  int net_scene_size = 16;  // end-to-end scenes are net_scene_size x net_scene_size
  int max_attempts = 50;    // resamples per point before giving up
  std::uint64_t seed = 0;
  LossConfig loss;
};

struct GradcheckResult {
  std::string name;
  int checked = 0;
  int failed = 0;
  int rejected = 0;  // candidate points discarded as too close to a kink
  double max_rel_error = 0.0;

  bool ok() const { return checked > 0 && failed == 0; }
};

// |a - b| / max(|a|, |b|, 1e-6).
double relative_error(double a, double b);

// One result per term: binary, pi, ms_cauchy, ms_truncated, quantization, total.
std::vector<GradcheckResult> loss_gradcheck(const GradcheckConfig& cfg);

// Parameter gradients of the segmentation net through total_loss on a synthetic scene.
GradcheckResult network_gradcheck(const GradcheckConfig& cfg);

}  // namespace dvis
