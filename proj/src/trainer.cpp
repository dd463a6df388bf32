#include "dvis/trainer.hpp"

#include <cmath>
#include <string>

#include "dvis/io.hpp"
#include "dvis/rng.hpp"

namespace dvis {

namespace {

void require_finite_terms(const LossTerms& t, std::size_t step) {
  const std::pair<const char*, double> named[] = {
      {"binary", t.binary}, {"pi", t.pi}, {"ms", t.ms}, {"quant", t.quant}, {"total", t.total}};
  for (auto [name, v] : named)
    if (!std::isfinite(v))
      throw NumericError("non-finite " + std::string(name) + " loss at step " + std::to_string(step));
}

}  // namespace

void TrainConfig::validate() const {
  if (steps < 1) throw DomainError("steps must be >= 1");
  if (scenes_per_step < 1) throw DomainError("scenes_per_step must be >= 1");
  if (log_interval < 1) throw DomainError("log_interval must be >= 1");
  if (optimizer.clip_grad_norm < 0.0) throw DomainError("clip_grad_norm must be >= 0");
  loss.validate();
  sampler.validate();
  net.validate_segmentation();
}

SceneGradient scene_gradient(const ParamSet& params, const SyntheticScene& scene, const LossConfig& loss,
                             const SamplerConfig& sampler) {
  const int d = params.config.downsample_factor();
  auto fw = forward(params, scene.image);
  const RealLabelMap f = to_label_map(fw.output);
  const GroundTruthMap gt = resize_nearest(scene.gt, d);
  const PairList pairs = sample_pairs(gt, sampler);
  SceneGradient out{total_loss(f, gt, pairs, loss), {}};
  out.grads = backward(params, fw.tape, to_image(out.loss.combined.grad));
  return out;
}

std::size_t scene_index_for(std::uint64_t seed, std::size_t dataset_size, std::size_t draw) {
  const std::size_t epoch = draw / dataset_size;
  std::vector<std::size_t> order(dataset_size);
  for (std::size_t i = 0; i < dataset_size; ++i) order[i] = i;
  Rng rng(counter_hash(seed, 10, epoch));
  rng.shuffle(order);
  return order[draw % dataset_size];
}

TrainResult train(const TrainConfig& tc, const SceneSource& dataset, const TrainObserver& observer) {
  tc.validate();
  if (dataset.size() == 0) throw DataError("training dataset is empty");

  TrainResult r;
  r.params = init(tc.net);
  r.opt = make_opt_state(r.params, tc.optimizer.learning_rate, tc.optimizer.momentum, tc.optimizer.weight_decay);

  const std::size_t n = dataset.size();
  const double scale = 1.0 / static_cast<double>(tc.scenes_per_step);

  for (std::size_t step = 0; step < tc.steps; ++step) {
    Gradients acc;
    LossTerms mean_terms;
    for (std::size_t slot = 0; slot < tc.scenes_per_step; ++slot) {
      const std::size_t draw = step * tc.scenes_per_step + slot;
      const SyntheticScene scene = dataset.scene(scene_index_for(tc.seed, n, draw));
      SamplerConfig sampler = tc.sampler;
      sampler.seed = counter_hash(tc.seed, 20, draw);
      SceneGradient sg = scene_gradient(r.params, scene, tc.loss, sampler);
      require_finite_terms(sg.loss.terms, step);
      accumulate(acc, sg.grads, scale);
      mean_terms.binary += scale * sg.loss.terms.binary;
      mean_terms.pi += scale * sg.loss.terms.pi;
      mean_terms.ms += scale * sg.loss.terms.ms;
      mean_terms.quant += scale * sg.loss.terms.quant;
      mean_terms.total += scale * sg.loss.terms.total;
    }
    clip_gradients(acc, tc.optimizer.clip_grad_norm);
    sgd_step(r.params, acc, r.opt);
    r.steps = step + 1;

    if (step % tc.log_interval == 0 || step + 1 == tc.steps) {
      TraceRow row{step, mean_terms};
      r.trace.push_back(row);
      if (observer) observer(row);
    }
    if (!tc.checkpoint_path.empty() && tc.checkpoint_interval > 0 && (step + 1) % tc.checkpoint_interval == 0)
      write_checkpoint(tc.checkpoint_path, {r.params, r.opt, r.steps});
  }
  if (!tc.checkpoint_path.empty()) write_checkpoint(tc.checkpoint_path, {r.params, r.opt, r.steps});
  return r;
}

}  // namespace dvis
