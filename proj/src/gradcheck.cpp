#include "dvis/gradcheck.hpp"

#include <cmath>
#include <functional>

#include "dvis/rng.hpp"
#include "dvis/sampling.hpp"
#include "dvis/synthgen.hpp"
#include "dvis/tinynet.hpp"
#include "dvis/trainer.hpp"

namespace dvis {

namespace {

using Term = std::function<LossValueGrad(const RealLabelMap&)>;
// True when pixel p of f is far enough from the term's coupled kinks.
using Clearance = std::function<bool(const RealLabelMap&, std::size_t)>;

constexpr double kMinKinkDistance = 1e-2;

// Distance from v to the nearest point where some per-pixel term has a kink.
double kink_distance(double v, const LossConfig& cfg) {
  double d = std::abs(v * 2.0 - std::round(v * 2.0)) / 2.0;  // integers and half-integers (quantization)
  for (double k : {0.0, cfg.huber_theta, cfg.m1 - cfg.huber_theta, cfg.m1}) d = std::min(d, std::abs(v - k));
  return d;
}

RealLabelMap random_map(Rng& rng, int size, const LossConfig& cfg) {
  RealLabelMap f(size, size);
  for (double& v : f.data) {
    do v = rng.uniform(-0.5, 3.5);
    while (kink_distance(v, cfg) < kMinKinkDistance);
  }
  return f;
}

GroundTruthMap random_gt(Rng& rng, int size) {
  GroundTruthMap gt(size, size);
  for (auto& id : gt.ids.data) id = static_cast<std::uint32_t>(rng.below(4));
  for (std::uint32_t id = 1; id < 4; ++id) gt.classes[id] = static_cast<int>(id);
  return gt;
}

struct Probe {
  double central = 0.0;
  bool smooth = false;
};

// Central difference at step h, accepted only if it agrees with the 2h estimate;
// disagreement means a kink lies within reach of the stencil.
Probe probe(const std::function<double(double)>& loss_at, double x, double h, double smooth_tol) {
  const double d1 = (loss_at(x + h) - loss_at(x - h)) / (2.0 * h);
  const double d2 = (loss_at(x + 2.0 * h) - loss_at(x - 2.0 * h)) / (4.0 * h);
  return {d1, std::abs(d1 - d2) <= smooth_tol * std::max({std::abs(d1), std::abs(d2), 1e-6})};
}

void record(GradcheckResult& r, double analytic, double numeric, double tol) {
  const double e = relative_error(analytic, numeric);
  ++r.checked;
  r.max_rel_error = std::max(r.max_rel_error, e);
  if (!(e <= tol)) ++r.failed;
}

// Pairs through p must keep f_d away from 0, theta, m2 - theta and m2.
Clearance pair_clearance(const PairList& pairs, const LossConfig& cfg) {
  return [&pairs, cfg](const RealLabelMap& f, std::size_t p) {
    for (const auto& pr : pairs.pairs) {
      if (pr.first != p && pr.second != p) continue;
      const double fd = std::abs(std::max(f.data[pr.first], 0.0) - std::max(f.data[pr.second], 0.0));
      for (double k : {0.0, cfg.huber_theta, cfg.m2 - cfg.huber_theta, cfg.m2})
        if (std::abs(fd - k) < kMinKinkDistance) return false;
    }
    return true;
  };
}

// Forward-difference positions touching p must stay off the truncation boundary.
Clearance truncation_clearance(const LossConfig& cfg) {
  return [cfg](const RealLabelMap& f, std::size_t p) {
    const int py = static_cast<int>(p) / f.width, px = static_cast<int>(p) % f.width;
    for (int y = py - 1; y <= py; ++y)
      for (int x = px - 1; x <= px; ++x) {
        if (y < 0 || x < 0 || y + 1 >= f.height || x + 1 >= f.width) continue;
        const double u = f.at(y, x + 1) - f.at(y, x), v = f.at(y + 1, x) - f.at(y, x);
        if (std::abs(cfg.mu * (u * u + v * v) - cfg.nu) < kMinKinkDistance) return false;
      }
    return true;
  };
}

GradcheckResult check_term(const std::string& name, const Term& term, std::uint64_t stream,
                           const GradcheckConfig& cfg, const Clearance& clear = {}) {
  GradcheckResult r;
  r.name = name;
  for (int point = 0; point < cfg.points; ++point) {
    Rng rng(counter_hash(cfg.seed, stream, static_cast<std::uint64_t>(point)));
    bool done = false;
    for (int attempt = 0; attempt < cfg.max_attempts && !done; ++attempt) {
      RealLabelMap f = random_map(rng, cfg.map_size, cfg.loss);
      const std::size_t p = rng.below(f.size());
      const double x = f.data[p];
      if (clear && !clear(f, p)) {
        ++r.rejected;
        continue;
      }
      auto loss_at = [&](double v) {
        f.data[p] = v;
        const double value = term(f).value;
        f.data[p] = x;
        return value;
      };
      const Probe pr = probe(loss_at, x, cfg.step, 0.1 * cfg.tolerance);
      if (!pr.smooth) {
        ++r.rejected;
        continue;
      }
      record(r, term(f).grad.data[p], pr.central, cfg.tolerance);
      done = true;
    }
    if (!done) ++r.failed;
  }
  return r;
}

}  // namespace

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

std::vector<GradcheckResult> loss_gradcheck(const GradcheckConfig& cfg) {
  Rng rng(counter_hash(cfg.seed, 100, 0));
  const GroundTruthMap gt = random_gt(rng, cfg.map_size);
  SamplerConfig sc;
  sc.window = 7;
  sc.center_radius = 1;
  sc.dilation = 2;
  const PairList pairs = sample_pairs_stratified(gt, sc);
  LossConfig truncated = cfg.loss;
  truncated.ms_variant = MsVariant::truncated;

  std::vector<GradcheckResult> out;
  out.push_back(check_term("binary", [&](const RealLabelMap& f) { return binary_loss(f, gt, cfg.loss); }, 101, cfg));
  out.push_back(check_term(
      "pi", [&](const RealLabelMap& f) { return permutation_invariant_loss(f, gt, pairs, cfg.loss); }, 102, cfg,
      pair_clearance(pairs, cfg.loss)));
  out.push_back(check_term("ms_cauchy", [&](const RealLabelMap& f) { return ms_cauchy_loss(f, cfg.loss); }, 103, cfg));
  out.push_back(
      check_term("ms_truncated", [&](const RealLabelMap& f) { return ms_truncated_loss(f, truncated); }, 104, cfg,
                 truncation_clearance(truncated)));
  out.push_back(check_term("quantization", [](const RealLabelMap& f) { return quantization_loss(f); }, 105, cfg));
  out.push_back(check_term(
      "total", [&](const RealLabelMap& f) { return total_loss(f, gt, pairs, cfg.loss).combined; }, 106, cfg,
      pair_clearance(pairs, cfg.loss)));
  return out;
}

GradcheckResult network_gradcheck(const GradcheckConfig& cfg) {
  SceneConfig scene_cfg;
  scene_cfg.height = scene_cfg.width = cfg.net_scene_size;
  scene_cfg.radius_min = 2.5;
  scene_cfg.radius_max = 4.0;
  scene_cfg.min_instances = 2;
  scene_cfg.max_instances = 3;
  scene_cfg.min_visible_pixels = 6;
  scene_cfg.occluder_prob = 0.0;
  scene_cfg.seed = cfg.seed;
  const SyntheticScene scene = generate(scene_cfg, 0);

  ParamSet params = init(NetConfig::segmentation_default(3, counter_hash(cfg.seed, 110, 0)));
  SamplerConfig sc;
  sc.window = 5;
  sc.center_radius = 1;
  sc.dilation = 2;
  const SceneGradient sg = scene_gradient(params, scene, cfg.loss, sc);

  GradcheckResult r;
  r.name = "network";
  Rng rng(counter_hash(cfg.seed, 111, 0));
  const std::size_t n = params.parameter_count();
  const int max_tries = cfg.net_params * cfg.max_attempts;
  for (int tries = 0; r.checked < cfg.net_params && tries < max_tries; ++tries) {
    const std::size_t i = rng.below(n);
    const double x = params.parameter(i);
    auto loss_at = [&](double v) {
      params.parameter(i) = v;
      const double value = scene_gradient(params, scene, cfg.loss, sc).loss.terms.total;
      params.parameter(i) = x;
      return value;
    };
    const Probe pr = probe(loss_at, x, cfg.net_step, 0.1 * cfg.net_tolerance);
    if (!pr.smooth) {
      ++r.rejected;
      continue;
    }
    record(r, sg.grads.parameter(i), pr.central, cfg.net_tolerance);
  }
  r.failed += cfg.net_params - r.checked;
  return r;
}

}  // namespace dvis
