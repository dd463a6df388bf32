#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dvis/losses.hpp"
#include "dvis/sampling.hpp"
#include "dvis/synthgen.hpp"
#include "dvis/tinynet.hpp"

namespace dvis {

struct OptimizerConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double clip_grad_norm = 0.0;  // 0 disables clipping
};

struct TrainConfig {
  std::size_t steps = 1000;
  std::size_t scenes_per_step = 1;
  LossConfig loss;
  SamplerConfig sampler;
  NetConfig net = NetConfig::segmentation_default();
  OptimizerConfig optimizer;
  std::size_t checkpoint_interval = 0;  // 0: only at completion
  std::size_t log_interval = 1;
  std::uint64_t seed = 0;
  std::string checkpoint_path;  // empty: no checkpoint files

  void validate() const;
};

struct TraceRow {
  std::size_t step = 0;
  LossTerms terms;
  bool operator==(const TraceRow& o) const {
    return step == o.step && terms.binary == o.terms.binary && terms.pi == o.terms.pi && terms.ms == o.terms.ms &&
           terms.quant == o.terms.quant && terms.total == o.terms.total;
  }
};

struct TrainResult {
  ParamSet params;
  OptState opt;
  std::size_t steps = 0;
  std::vector<TraceRow> trace;
};

// Called after every logged step; may be empty.
using TrainObserver = std::function<void(const TraceRow&)>;

// One optimization step's worth of forward, loss and gradient on a single scene.
struct SceneGradient {
  TotalLoss loss;
  Gradients grads;
};

SceneGradient scene_gradient(const ParamSet& params, const SyntheticScene& scene, const LossConfig& loss,
                             const SamplerConfig& sampler);

// Index of the scene used at (step, slot): epochs visit every scene once in a
// seeded shuffled order.
std::size_t scene_index_for(std::uint64_t seed, std::size_t dataset_size, std::size_t draw);

TrainResult train(const TrainConfig& tc, const SceneSource& dataset, const TrainObserver& observer = {});

}  // namespace dvis
