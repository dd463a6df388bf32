#include "dvis/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace dvis {

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) throw DimensionError("mask_iou: masks differ in size");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a.data[i] != 0, y = b.data[i] != 0;
    inter += (x && y) ? 1 : 0;
    uni += (x || y) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::size_t count_gt_instances(const std::vector<GroundTruthMap>& gts, int cls) {
  std::size_t n = 0;
  for (const auto& gt : gts)
    for (auto id : gt.instance_ids())
      if (gt.classes.at(id) == cls) ++n;
  return n;
}

double average_precision(const std::vector<std::vector<ScoredMask>>& detections,
                         const std::vector<GroundTruthMap>& gts, double iou_threshold, int cls) {
  if (detections.size() != gts.size()) throw DimensionError("detections and GT cover different image counts");

  struct Entry {
    std::size_t image;
    const ScoredMask* det;
  };
  std::vector<Entry> ranked;
  for (std::size_t i = 0; i < detections.size(); ++i)
    for (const auto& d : detections[i])
      if (d.cls == cls) ranked.push_back({i, &d});
  std::stable_sort(ranked.begin(), ranked.end(), [](const Entry& a, const Entry& b) { return a.det->score > b.det->score; });

  // GT masks of the class, per image.
  std::vector<std::vector<BinaryMask>> gt_masks(gts.size());
  std::size_t positives = 0;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    for (auto id : gts[i].instance_ids()) {
      if (gts[i].classes.at(id) != cls) continue;
      gt_masks[i].push_back(gts[i].instance_mask(id));
      ++positives;
    }
  }
  if (positives == 0) return 0.0;

  std::vector<std::vector<bool>> used(gts.size());
  for (std::size_t i = 0; i < gts.size(); ++i) used[i].assign(gt_masks[i].size(), false);

  std::vector<double> precision, recall;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    const auto& e = ranked[k];
    double best = -1.0;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < gt_masks[e.image].size(); ++j) {
      if (used[e.image][j]) continue;
      const double iou = mask_iou(e.det->mask, gt_masks[e.image][j]);
      if (iou > best) {
        best = iou;
        best_j = j;
      }
    }
    if (best >= iou_threshold) {
      used[e.image][best_j] = true;
      ++tp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(positives));
  }

  // Precision envelope, then sum of (recall step) * envelope.
  for (std::size_t k = precision.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t k = 0; k < precision.size(); ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return ap;
}

BinaryMask boundary_pixels(const BinaryMask& mask) {
  BinaryMask out(mask.height, mask.width, 0);
  const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(y, x)) continue;
      for (int k = 0; k < 4; ++k) {
        const int ny = y + dy[k], nx = x + dx[k];
        if (mask.contains(ny, nx) && !mask.at(ny, nx)) {
          out.at(y, x) = 1;
          break;
        }
      }
    }
  }
  return out;
}

Plane<int> chebyshev_distance(const BinaryMask& mask) {
  const int far = mask.height + mask.width + 1;
  Plane<int> d(mask.height, mask.width, far);
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask.data[i]) d.data[i] = 0;
  auto relax = [&](int y, int x, int ny, int nx) {
    if (d.contains(ny, nx)) d.at(y, x) = std::min(d.at(y, x), d.at(ny, nx) + 1);
  };
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x) {
      relax(y, x, y - 1, x - 1);
      relax(y, x, y - 1, x);
      relax(y, x, y - 1, x + 1);
      relax(y, x, y, x - 1);
    }
  for (int y = d.height - 1; y >= 0; --y)
    for (int x = d.width - 1; x >= 0; --x) {
      relax(y, x, y + 1, x + 1);
      relax(y, x, y + 1, x);
      relax(y, x, y + 1, x - 1);
      relax(y, x, y, x + 1);
    }
  return d;
}

double contour_f1_image(const std::vector<ScoredMask>& predictions, const GroundTruthMap& gt, int tolerance) {
  if (tolerance < 0) throw DomainError("contour tolerance must be >= 0");
  const int h = gt.height(), w = gt.width();
  std::map<int, BinaryMask> pred_b, gt_b;
  auto merge = [&](std::map<int, BinaryMask>& into, int cls, const BinaryMask& b) {
    auto [it, fresh] = into.try_emplace(cls, h, w, 0);
    for (std::size_t i = 0; i < b.size(); ++i) it->second.data[i] |= b.data[i];
  };
  for (const auto& p : predictions) {
    if (!p.mask.same_shape(h, w)) throw DimensionError("contour_f1: prediction size differs from GT");
    merge(pred_b, p.cls, boundary_pixels(p.mask));
  }
  for (auto id : gt.instance_ids()) merge(gt_b, gt.classes.at(id), boundary_pixels(gt.instance_mask(id)));

  std::size_t pred_total = 0, pred_hit = 0, gt_total = 0, gt_hit = 0;
  auto score = [&](const std::map<int, BinaryMask>& from, const std::map<int, BinaryMask>& to, std::size_t& total,
                   std::size_t& hit) {
    for (const auto& [cls, b] : from) {
      const auto it = to.find(cls);
      Plane<int> dist = it != to.end() ? chebyshev_distance(it->second) : Plane<int>(h, w, h + w + 1);
      for (std::size_t i = 0; i < b.size(); ++i) {
        if (!b.data[i]) continue;
        ++total;
        if (it != to.end() && dist.data[i] <= tolerance) ++hit;
      }
    }
  };
  score(pred_b, gt_b, pred_total, pred_hit);
  score(gt_b, pred_b, gt_total, gt_hit);

  if (pred_total == 0 && gt_total == 0) return 1.0;
  if (pred_total == 0 || gt_total == 0) return 0.0;
  const double p = static_cast<double>(pred_hit) / static_cast<double>(pred_total);
  const double r = static_cast<double>(gt_hit) / static_cast<double>(gt_total);
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

double contour_f1(const std::vector<std::vector<ScoredMask>>& predictions, const std::vector<GroundTruthMap>& gts,
                  int tolerance) {
  if (predictions.size() != gts.size()) throw DimensionError("predictions and GT cover different image counts");
  if (gts.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < gts.size(); ++i) sum += contour_f1_image(predictions[i], gts[i], tolerance);
  return sum / static_cast<double>(gts.size());
}

EvalReport evaluate(const std::vector<std::vector<ScoredMask>>& detections, const std::vector<GroundTruthMap>& gts,
                    int class_count) {
  EvalReport rep;
  for (int c = 1; c <= class_count; ++c) {
    if (count_gt_instances(gts, c) == 0) continue;
    auto& row = rep.per_class_ap[c];
    for (double t : rep.iou_thresholds) row.push_back(average_precision(detections, gts, t, c));
  }
  for (std::size_t k = 0; k < rep.iou_thresholds.size(); ++k) {
    double s = 0.0;
    for (const auto& [c, row] : rep.per_class_ap) s += row[k];
    rep.map_per_threshold.push_back(rep.per_class_ap.empty() ? 0.0 : s / static_cast<double>(rep.per_class_ap.size()));
  }
  rep.ap_average = std::accumulate(rep.map_per_threshold.begin(), rep.map_per_threshold.end(), 0.0) /
                   static_cast<double>(rep.map_per_threshold.size());
  for (int t : rep.contour_tolerances) rep.contour_f1.push_back(contour_f1(detections, gts, t));
  return rep;
}

}  // namespace dvis
