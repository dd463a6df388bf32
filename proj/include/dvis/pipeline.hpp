#pragma once

#include <cstdint>
#include <vector>

#include "dvis/discretize.hpp"
#include "dvis/metrics.hpp"
#include "dvis/synthgen.hpp"
#include "dvis/tinynet.hpp"
#include "dvis/trainer.hpp"
#include "dvis/verify.hpp"

namespace dvis {

struct VerifierTrainConfig {
  std::size_t steps = 1500;
  std::size_t batch = 16;
  OptimizerConfig optimizer{0.02, 0.9, 1e-4, 5.0};
  std::uint64_t seed = 0;
};

struct PipelineConfig {
  MeanShiftConfig mean_shift;
  VerifyConfig verify;
  VerifierTrainConfig verifier;
};

struct Inference {
  RealLabelMap f;
  std::vector<CandidateSegment> candidates;  // prediction resolution
  std::vector<Detection> scored;             // every candidate, masks at image resolution
  std::vector<Detection> detections;         // accepted subset
};

Inference run_inference(const ParamSet& seg, const ParamSet& head, const ImageGrid& image, const PipelineConfig& cfg);

struct VerifierSample {
  ImageGrid block;
  VerifyTarget target;
};

// Discretizes every scene with the trained predictor and labels each candidate
// against the scene's GT.
std::vector<VerifierSample> collect_verifier_samples(const ParamSet& seg, const SceneSource& scenes,
                                                     const PipelineConfig& cfg);

struct HeadLoss {
  double value = 0.0;
  ImageGrid grad;  // with respect to the raw head output
};

// Cross-entropy on the class logits plus Huber on the raw IoU output.
HeadLoss head_loss(const ImageGrid& head_out, const VerifyTarget& target, const VerifyConfig& cfg);

struct VerifierTrainResult {
  ParamSet head;
  std::vector<double> trace;  // mean batch loss per step
};

VerifierTrainResult train_verifier(const std::vector<VerifierSample>& samples, const PipelineConfig& cfg);

struct EvalRun {
  EvalReport report;
  double mean_candidates = 0.0;
  double mean_gt_instances = 0.0;
  std::vector<std::vector<Detection>> detections;  // accepted, per image
};

EvalRun evaluate_model(const ParamSet& seg, const ParamSet& head, const SceneSource& scenes, const PipelineConfig& cfg);

}  // namespace dvis
