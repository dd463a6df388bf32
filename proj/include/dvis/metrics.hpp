#pragma once

#include <map>
#include <vector>

#include "dvis/grid.hpp"

namespace dvis {

// |a & b| / |a | b|; 0 when both are empty.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

// An instance prediction as seen by the evaluator.
struct ScoredMask {
  BinaryMask mask;
  int cls = 0;
  double score = 0.0;
};

// VOC-style AP for one class: detections ranked by score (stable), each
// matched greedily to the unmatched same-class GT instance of highest IoU if
// that IoU reaches `iou_threshold`; all-points interpolated precision.
// Returns 0 when the class has no GT instance.
double average_precision(const std::vector<std::vector<ScoredMask>>& detections,
                         const std::vector<GroundTruthMap>& gts, double iou_threshold, int cls);

// Number of GT instances of `cls` across the images.
std::size_t count_gt_instances(const std::vector<GroundTruthMap>& gts, int cls);

// Pixels of `mask` with a 4-neighbour (inside the image) outside the mask.
BinaryMask boundary_pixels(const BinaryMask& mask);

// Chessboard distance from every pixel to the nearest set pixel; a large
// sentinel when the mask is empty.
Plane<int> chebyshev_distance(const BinaryMask& mask);

// Boundary F1 for one image: precision over predicted boundary points within
// `tolerance` of a same-class GT boundary point, recall symmetrically.
double contour_f1_image(const std::vector<ScoredMask>& predictions, const GroundTruthMap& gt, int tolerance);

// Mean of contour_f1_image over images.
double contour_f1(const std::vector<std::vector<ScoredMask>>& predictions, const std::vector<GroundTruthMap>& gts,
                  int tolerance);

struct EvalReport {
  std::vector<double> iou_thresholds{0.5, 0.6, 0.7, 0.8, 0.9};
  std::map<int, std::vector<double>> per_class_ap;  // class -> AP per threshold; classes with GT only
  std::vector<double> map_per_threshold;
  double ap_average = 0.0;
  std::vector<int> contour_tolerances{1, 5, 10};
  std::vector<double> contour_f1;
};

EvalReport evaluate(const std::vector<std::vector<ScoredMask>>& detections, const std::vector<GroundTruthMap>& gts,
                    int class_count);

}  // namespace dvis
