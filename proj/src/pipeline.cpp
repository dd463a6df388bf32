#include "dvis/pipeline.hpp"

#include <cmath>

#include "dvis/losses.hpp"
#include "dvis/rng.hpp"

namespace dvis {

namespace {

int scale_between(const ImageGrid& image, const RealLabelMap& f) {
  if (image.height % f.height != 0 || image.width % f.width != 0 || image.height / f.height != image.width / f.width)
    throw DimensionError("image and label map are not related by an integer factor");
  return image.height / f.height;
}

}  // namespace

Inference run_inference(const ParamSet& seg, const ParamSet& head, const ImageGrid& image, const PipelineConfig& cfg) {
  Inference r;
  r.f = to_label_map(forward(seg, image).output);
  r.candidates = discretize(r.f, cfg.mean_shift);
  const int d = scale_between(image, r.f);
  for (const auto& c : r.candidates) {
    const auto out = verify_forward(head, extract_roi(image, r.f, c, cfg.verify), cfg.verify);
    r.scored.push_back(make_detection(upsample_mask(c.mask, d), out, cfg.verify.alpha));
  }
  r.detections = accept(r.scored, cfg.verify);
  return r;
}

std::vector<VerifierSample> collect_verifier_samples(const ParamSet& seg, const SceneSource& scenes,
                                                     const PipelineConfig& cfg) {
  std::vector<VerifierSample> out;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const SyntheticScene s = scenes.scene(i);
    const RealLabelMap f = to_label_map(forward(seg, s.image).output);
    const auto cands = discretize(f, cfg.mean_shift);
    const int d = scale_between(s.image, f);
    std::vector<BinaryMask> full;
    for (const auto& c : cands) full.push_back(upsample_mask(c.mask, d));
    const auto targets = verify_train_targets(full, s.gt, cfg.verify);
    for (std::size_t k = 0; k < cands.size(); ++k)
      out.push_back({extract_roi(s.image, f, cands[k], cfg.verify), targets[k]});
  }
  return out;
}

HeadLoss head_loss(const ImageGrid& head_out, const VerifyTarget& target, const VerifyConfig& cfg) {
  const VerifyOutput v = head_output(head_out, cfg.class_count);
  HeadLoss l{0.0, ImageGrid(1, 1, head_out.channels, 0.0)};
  const double p_target = std::max(v.probabilities[target.cls], 1e-300);
  l.value = -std::log(p_target);
  for (int c = 0; c <= cfg.class_count; ++c) l.grad.data[c] = v.probabilities[c] - (c == target.cls ? 1.0 : 0.0);
  // The IoU output is regressed before clamping so the gradient never vanishes.
  const double r = v.iou_raw - target.iou;
  const auto h = huber(std::abs(r), cfg.huber_theta);
  l.value += h.value;
  l.grad.data[cfg.class_count + 1] = r > 0.0 ? h.derivative : (r < 0.0 ? -h.derivative : 0.0);
  return l;
}

VerifierTrainResult train_verifier(const std::vector<VerifierSample>& samples, const PipelineConfig& cfg) {
  cfg.verify.validate();
  VerifierTrainResult r;
  r.head = init(cfg.verify.head);
  if (samples.empty()) return r;
  const auto& oc = cfg.verifier.optimizer;
  OptState opt = make_opt_state(r.head, oc.learning_rate, oc.momentum, oc.weight_decay);
  Rng rng(counter_hash(cfg.verifier.seed, 30, 0));
  const double scale = 1.0 / static_cast<double>(cfg.verifier.batch);
  for (std::size_t step = 0; step < cfg.verifier.steps; ++step) {
    Gradients acc;
    double loss = 0.0;
    for (std::size_t b = 0; b < cfg.verifier.batch; ++b) {
      const auto& s = samples[rng.below(samples.size())];
      auto fw = forward(r.head, s.block);
      const HeadLoss hl = head_loss(fw.output, s.target, cfg.verify);
      if (!std::isfinite(hl.value)) throw NumericError("non-finite verifier loss at step " + std::to_string(step));
      loss += scale * hl.value;
      Gradients g = backward(r.head, fw.tape, hl.grad);
      accumulate(acc, g, scale);
    }
    clip_gradients(acc, oc.clip_grad_norm);
    sgd_step(r.head, acc, opt);
    r.trace.push_back(loss);
  }
  return r;
}

EvalRun evaluate_model(const ParamSet& seg, const ParamSet& head, const SceneSource& scenes, const PipelineConfig& cfg) {
  EvalRun run;
  std::vector<std::vector<ScoredMask>> scored;
  std::vector<GroundTruthMap> gts;
  std::size_t candidates = 0, instances = 0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const SyntheticScene s = scenes.scene(i);
    Inference inf = run_inference(seg, head, s.image, cfg);
    candidates += inf.candidates.size();
    instances += s.gt.instance_ids().size();
    scored.push_back(to_scored(inf.detections));
    run.detections.push_back(std::move(inf.detections));
    gts.push_back(s.gt);
  }
  run.report = evaluate(scored, gts, cfg.verify.class_count);
  if (!gts.empty()) {
    run.mean_candidates = static_cast<double>(candidates) / static_cast<double>(gts.size());
    run.mean_gt_instances = static_cast<double>(instances) / static_cast<double>(gts.size());
  }
  return run;
}

}  // namespace dvis
