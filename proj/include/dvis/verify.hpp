#pragma once

#include <cstdint>
#include <vector>

#include "dvis/discretize.hpp"
#include "dvis/grid.hpp"
#include "dvis/metrics.hpp"
#include "dvis/tinynet.hpp"

namespace dvis {

constexpr int kRejectClass = 0;

struct VerifyConfig {
  int roi_size = 14;
  int class_count = 3;
  double alpha = 0.5;  // score = alpha * s_iou + (1 - alpha) * s_cls
  double accept_threshold = 0.5;
  double match_iou_floor = 0.5;
  double huber_theta = 0.1;
  NetConfig head = default_head(3, 3);

  void validate() const;

  // conv stack on an roi block of image_channels + 2 channels, global pooling,
  // and a 1x1 conv producing class_count + 1 logits and one IoU output.
  static NetConfig default_head(int image_channels, int class_count, std::uint64_t seed = 0);
};

// Axis-aligned box in normalized [0, 1] coordinates of the map it crops.
struct NormBox {
  double y0 = 0.0, x0 = 0.0, y1 = 1.0, x1 = 1.0;
};

// Bilinear crop-and-resize with half-pixel sample centers and edge clamping.
ImageGrid crop_resize(const ImageGrid& src, const NormBox& box, int out_h, int out_w);
ImageGrid resize_bilinear(const ImageGrid& src, int out_h, int out_w);

// Tight box of the mask, grown by 10% of its size per side, clipped to the map.
NormBox roi_box(const BinaryMask& mask);

// Image channels, then f, then the mask, all cropped to roi_size x roi_size.
ImageGrid extract_roi(const ImageGrid& image, const RealLabelMap& f, const CandidateSegment& seg,
                      const VerifyConfig& cfg);

struct VerifyOutput {
  std::vector<double> probabilities;  // class_count + 1 entries, index 0 = reject
  double s_iou = 0.0;                 // clamped to [0, 1]
  double iou_raw = 0.0;
};

// Softmax over the first class_count + 1 head outputs; the last output is the IoU.
VerifyOutput head_output(const ImageGrid& out, int class_count);
VerifyOutput verify_forward(const ParamSet& head, const ImageGrid& block, const VerifyConfig& cfg);

struct Detection {
  BinaryMask mask;
  int cls = kRejectClass;
  double s_cls = 0.0;
  double s_iou = 0.0;
  double score = 0.0;
};

// Class = most probable non-reject class; s_cls its probability.
Detection make_detection(BinaryMask mask, const VerifyOutput& out, double alpha);

struct VerifyTarget {
  int cls = kRejectClass;
  double iou = 0.0;
  std::uint32_t matched_id = 0;  // 0 when no GT overlaps
};

// Best-IoU GT instance for every mask (masks at GT resolution). Ties go to the
// smallest id; the class is rejected below the matching floor.
std::vector<VerifyTarget> verify_train_targets(const std::vector<BinaryMask>& candidates, const GroundTruthMap& gt,
                                               const VerifyConfig& cfg);

// Keeps non-reject detections with score >= threshold, in input order.
std::vector<Detection> accept(const std::vector<Detection>& dets, const VerifyConfig& cfg);

ScoredMask to_scored(const Detection& d);
std::vector<ScoredMask> to_scored(const std::vector<Detection>& dets);

}  // namespace dvis
