#include "dvis/losses.hpp"

#include <cmath>
#include <string>

#include "dvis/rng.hpp"

namespace dvis {

namespace {

void require_same_shape(const RealLabelMap& f, const GroundTruthMap& gt) {
  if (!f.same_shape(gt.ids))
    throw DimensionError("label map " + std::to_string(f.height) + "x" + std::to_string(f.width) +
                         " does not match ground truth " + std::to_string(gt.height()) + "x" +
                         std::to_string(gt.width()));
}

void require_min_2x2(const RealLabelMap& f) {
  if (f.height < 2 || f.width < 2) throw DimensionError("regularizer needs a map of at least 2x2");
}

double sign_or_zero(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

void LossConfig::validate() const {
  if (!(huber_theta > 0.0)) throw DomainError("huber_theta must be > 0");
  if (!(m1 > 0.0)) throw DomainError("m1 must be > 0");
  if (!(m2 > 0.0)) throw DomainError("m2 must be > 0");
  if (mu < 0.0 || nu < 0.0) throw DomainError("mu and nu must be >= 0");
  if (weight_binary < 0.0 || weight_pi < 0.0 || weight_ms < 0.0 || weight_quant < 0.0)
    throw DomainError("loss weights must be >= 0");
}

HuberValue huber(double v, double theta) {
  if (v < 0.0) throw DomainError("huber input must be non-negative");
  if (v < theta) return {v * v / (2.0 * theta), v / theta};
  return {v - theta / 2.0, 1.0};
}

LossValueGrad binary_loss(const RealLabelMap& f, const GroundTruthMap& gt, const LossConfig& cfg) {
  require_same_shape(f, gt);
  const double n = static_cast<double>(f.size());
  LossValueGrad out{0.0, RealLabelMap(f.height, f.width, 0.0)};
  std::vector<double> per_pixel(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = f.data[i];
    if (gt.ids.data[i] == 0) {
      if (v > 0.0) {
        auto h = huber(v, cfg.huber_theta);
        per_pixel[i] = h.value;
        out.grad.data[i] = h.derivative / n;
      }
    } else {
      const double arg = cfg.m1 - v;
      if (arg > 0.0) {
        auto h = huber(arg, cfg.huber_theta);
        per_pixel[i] = h.value;
        out.grad.data[i] = -h.derivative / n;
      }
    }
  }
  out.value = pairwise_sum(per_pixel) / n;
  return out;
}

PairTerm pair_loss_term(double f1, double f2, bool same_instance, const LossConfig& cfg) {
  const double r1 = f1 > 0.0 ? f1 : 0.0;
  const double r2 = f2 > 0.0 ? f2 : 0.0;
  const double diff = r1 - r2;
  const double fd = std::abs(diff);
  // d fd / d f1 and d fd / d f2, with zero subgradients at the kinks.
  const double s = sign_or_zero(diff);
  const double dfd_df1 = f1 > 0.0 ? s : 0.0;
  const double dfd_df2 = f2 > 0.0 ? -s : 0.0;

  PairTerm t;
  if (same_instance) {
    auto h = huber(fd, cfg.huber_theta);
    t.value = h.value;
    t.g1 = h.derivative * dfd_df1;
    t.g2 = h.derivative * dfd_df2;
  } else {
    const double arg = cfg.m2 - fd;
    if (arg > 0.0) {
      auto h = huber(arg, cfg.huber_theta);
      t.value = h.value;
      t.g1 = -h.derivative * dfd_df1;
      t.g2 = -h.derivative * dfd_df2;
    }
  }
  return t;
}

LossValueGrad permutation_invariant_loss(const RealLabelMap& f, const GroundTruthMap& gt, const PairList& pairs,
                                         const LossConfig& cfg) {
  require_same_shape(f, gt);
  LossValueGrad out{0.0, RealLabelMap(f.height, f.width, 0.0)};
  if (pairs.empty()) return out;
  if (pairs.height != f.height || pairs.width != f.width)
    throw DimensionError("pair list was sampled on a map of different size");
  const double n = static_cast<double>(pairs.size());
  const std::size_t limit = f.size();
  std::vector<double> values(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [a, b] = pairs.pairs[k];
    if (a >= limit || b >= limit) throw DimensionError("pair index out of range");
    auto t = pair_loss_term(f.data[a], f.data[b], gt.ids.data[a] == gt.ids.data[b], cfg);
    values[k] = t.value;
    out.grad.data[a] += t.g1 / n;
    out.grad.data[b] += t.g2 / n;
  }
  out.value = pairwise_sum(values) / n;
  return out;
}

LossValueGrad ms_cauchy_loss(const RealLabelMap& f, const LossConfig&) {
  require_min_2x2(f);
  const int h = f.height, w = f.width;
  const double n = static_cast<double>(h - 1) * (w - 1);
  LossValueGrad out{0.0, RealLabelMap(h, w, 0.0)};
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n));
  for (int y = 0; y + 1 < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      const double c = f.at(y, x);
      const double u = f.at(y, x + 1) - c;
      const double v = f.at(y + 1, x) - c;
      const double q = u * u + v * v + 1.0;
      values.push_back(std::log(q));
      const double gu = 2.0 * u / q / n;
      const double gv = 2.0 * v / q / n;
      out.grad.at(y, x + 1) += gu;
      out.grad.at(y + 1, x) += gv;
      out.grad.at(y, x) -= gu + gv;
    }
  }
  out.value = pairwise_sum(values) / n;
  return out;
}

LossValueGrad ms_truncated_loss(const RealLabelMap& f, const LossConfig& cfg) {
  require_min_2x2(f);
  const int h = f.height, w = f.width;
  const double n = static_cast<double>(h - 1) * (w - 1);
  LossValueGrad out{0.0, RealLabelMap(h, w, 0.0)};
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n));
  for (int y = 0; y + 1 < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      const double c = f.at(y, x);
      const double u = f.at(y, x + 1) - c;
      const double v = f.at(y + 1, x) - c;
      const double quad = cfg.mu * (u * u + v * v);
      if (quad <= cfg.nu) {
        values.push_back(quad);
        const double gu = 2.0 * cfg.mu * u / n;
        const double gv = 2.0 * cfg.mu * v / n;
        out.grad.at(y, x + 1) += gu;
        out.grad.at(y + 1, x) += gv;
        out.grad.at(y, x) -= gu + gv;
      } else {
        values.push_back(cfg.nu);
      }
    }
  }
  out.value = pairwise_sum(values) / n;
  return out;
}

LossValueGrad ms_loss(const RealLabelMap& f, const LossConfig& cfg) {
  return cfg.ms_variant == MsVariant::cauchy ? ms_cauchy_loss(f, cfg) : ms_truncated_loss(f, cfg);
}

LossValueGrad quantization_loss(const RealLabelMap& f) {
  const double n = static_cast<double>(f.size());
  LossValueGrad out{0.0, RealLabelMap(f.height, f.width, 0.0)};
  std::vector<double> values(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    // std::round rounds half away from zero.
    const double r = f.data[i] - std::round(f.data[i]);
    values[i] = std::abs(r);
    out.grad.data[i] = sign_or_zero(r) / n;
  }
  out.value = pairwise_sum(values) / n;
  return out;
}

TotalLoss total_loss(const RealLabelMap& f, const GroundTruthMap& gt, const PairList& pairs, const LossConfig& cfg) {
  cfg.validate();
  require_same_shape(f, gt);
  TotalLoss out{{0.0, RealLabelMap(f.height, f.width, 0.0)}, {}};
  auto accumulate = [&](double weight, const LossValueGrad& term, double& slot) {
    slot = term.value;
    if (weight == 0.0) return;
    for (std::size_t i = 0; i < f.size(); ++i) out.combined.grad.data[i] += weight * term.grad.data[i];
  };
  accumulate(cfg.weight_binary, binary_loss(f, gt, cfg), out.terms.binary);
  accumulate(cfg.weight_pi, permutation_invariant_loss(f, gt, pairs, cfg), out.terms.pi);
  if (f.height >= 2 && f.width >= 2)
    accumulate(cfg.weight_ms, ms_loss(f, cfg), out.terms.ms);
  else if (cfg.weight_ms != 0.0)
    throw DimensionError("regularizer needs a map of at least 2x2");
  accumulate(cfg.weight_quant, quantization_loss(f), out.terms.quant);

  out.terms.total = cfg.weight_binary * out.terms.binary + cfg.weight_pi * out.terms.pi +
                    cfg.weight_ms * out.terms.ms + cfg.weight_quant * out.terms.quant;
  out.combined.value = out.terms.total;
  return out;
}

}  // namespace dvis
