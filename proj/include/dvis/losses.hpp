#pragma once

#include "dvis/grid.hpp"
#include "dvis/sampling.hpp"

namespace dvis {

enum class MsVariant { cauchy, truncated };

struct LossConfig {
  double huber_theta = 0.1;
  double m1 = 2.0;  // foreground margin of the binary term
  double m2 = 1.0;  // separation margin between different instances
  double mu = 1.0;  // smoothness weight of the truncated regularizer
  double nu = 1.0;  // truncation level (edge cost) of the truncated regularizer
  double weight_binary = 1.0;
  double weight_pi = 1.0;
  double weight_ms = 1.0;
  double weight_quant = 1.0;
  MsVariant ms_variant = MsVariant::cauchy;

  void validate() const;
};

struct LossValueGrad {
  double value = 0.0;
  RealLabelMap grad;
};

struct HuberValue {
  double value = 0.0;
  double derivative = 0.0;
};

// v^2 / (2 theta) below theta, v - theta / 2 above. Requires v >= 0.
HuberValue huber(double v, double theta);

// Mean over pixels of L_h(relu(f)) on background and L_h(relu(m1 - f)) on foreground.
LossValueGrad binary_loss(const RealLabelMap& f, const GroundTruthMap& gt, const LossConfig& cfg);

struct PairTerm {
  double value = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;
};

// fd = |relu(f1) - relu(f2)|; L_h(fd) for the same instance, L_h(max(m2 - fd, 0))
// otherwise. g1, g2 are derivatives with respect to f1, f2.
PairTerm pair_loss_term(double f1, double f2, bool same_instance, const LossConfig& cfg);

// Mean of pair_loss_term over the pair list.
LossValueGrad permutation_invariant_loss(const RealLabelMap& f, const GroundTruthMap& gt, const PairList& pairs,
                                         const LossConfig& cfg);

// Mean over the (h-1)(w-1) positions of log(dx^2 + dy^2 + 1) with forward differences.
LossValueGrad ms_cauchy_loss(const RealLabelMap& f, const LossConfig& cfg);

// Mean over the same positions of min(mu |grad f|^2, nu); ties take the quadratic branch.
LossValueGrad ms_truncated_loss(const RealLabelMap& f, const LossConfig& cfg);

// Dispatches on cfg.ms_variant.
LossValueGrad ms_loss(const RealLabelMap& f, const LossConfig& cfg);

// Mean of |f - round(f)|, straight-through gradient sign(f - round(f)).
LossValueGrad quantization_loss(const RealLabelMap& f);

struct LossTerms {
  double binary = 0.0;
  double pi = 0.0;
  double ms = 0.0;
  double quant = 0.0;
  double total = 0.0;
};

struct TotalLoss {
  LossValueGrad combined;
  LossTerms terms;  // unweighted per-term values; terms.total is the weighted sum
};

TotalLoss total_loss(const RealLabelMap& f, const GroundTruthMap& gt, const PairList& pairs, const LossConfig& cfg);

}  // namespace dvis
