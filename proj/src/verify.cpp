#include "dvis/verify.hpp"

#include <algorithm>
#include <cmath>

namespace dvis {

void VerifyConfig::validate() const {
  if (roi_size < 4) throw DomainError("roi_size must be >= 4");
  if (class_count < 1) throw DomainError("class_count must be >= 1");
  if (alpha < 0.0 || alpha > 1.0) throw DomainError("alpha must be in [0, 1]");
  if (!(huber_theta > 0.0)) throw DomainError("huber_theta must be > 0");
  head.validate();
  if (head.output_channels() != class_count + 2)
    throw DimensionError("verification head must output class_count + 2 channels");
}

NetConfig VerifyConfig::default_head(int image_channels, int class_count, std::uint64_t seed) {
  NetConfig cfg;
  cfg.input_channels = image_channels + 2;
  cfg.init_seed = seed;
  cfg.layers = {LayerSpec::conv(image_channels + 2, 16, 3, 1),
                LayerSpec::relu(),
                LayerSpec::conv(16, 32, 3, 2),
                LayerSpec::relu(),
                LayerSpec::conv(32, 32, 3, 1),
                LayerSpec::relu(),
                LayerSpec::global_avg_pool(),
                LayerSpec::conv(32, class_count + 2, 1, 1)};
  return cfg;
}

ImageGrid crop_resize(const ImageGrid& src, const NormBox& box, int out_h, int out_w) {
  ImageGrid out(out_h, out_w, src.channels, 0.0);
  auto sample_axis = [](double lo, double hi, int i, int n_out, int n_src, int& a, int& b, double& t) {
    double p = (lo + (i + 0.5) / n_out * (hi - lo)) * n_src - 0.5;
    p = std::clamp(p, 0.0, static_cast<double>(n_src - 1));
    a = static_cast<int>(std::floor(p));
    b = std::min(a + 1, n_src - 1);
    t = p - a;
  };
  for (int i = 0; i < out_h; ++i) {
    int ya, yb;
    double ty;
    sample_axis(box.y0, box.y1, i, out_h, src.height, ya, yb, ty);
    for (int j = 0; j < out_w; ++j) {
      int xa, xb;
      double tx;
      sample_axis(box.x0, box.x1, j, out_w, src.width, xa, xb, tx);
      for (int c = 0; c < src.channels; ++c) {
        const double top = (1.0 - tx) * src.at(c, ya, xa) + tx * src.at(c, ya, xb);
        const double bot = (1.0 - tx) * src.at(c, yb, xa) + tx * src.at(c, yb, xb);
        out.at(c, i, j) = (1.0 - ty) * top + ty * bot;
      }
    }
  }
  return out;
}

ImageGrid resize_bilinear(const ImageGrid& src, int out_h, int out_w) { return crop_resize(src, {}, out_h, out_w); }

NormBox roi_box(const BinaryMask& mask) {
  int y0 = mask.height, y1 = -1, x0 = mask.width, x1 = -1;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(y, x)) {
        y0 = std::min(y0, y), y1 = std::max(y1, y);
        x0 = std::min(x0, x), x1 = std::max(x1, x);
      }
  if (y1 < 0) throw DomainError("roi of an empty mask");
  const double bh = y1 + 1 - y0, bw = x1 + 1 - x0;
  NormBox b;
  b.y0 = std::max(0.0, y0 - 0.1 * bh) / mask.height;
  b.y1 = std::min<double>(mask.height, y1 + 1 + 0.1 * bh) / mask.height;
  b.x0 = std::max(0.0, x0 - 0.1 * bw) / mask.width;
  b.x1 = std::min<double>(mask.width, x1 + 1 + 0.1 * bw) / mask.width;
  return b;
}

ImageGrid extract_roi(const ImageGrid& image, const RealLabelMap& f, const CandidateSegment& seg,
                      const VerifyConfig& cfg) {
  if (!seg.mask.same_shape(f)) throw DimensionError("segment mask does not match the label map");
  const NormBox box = roi_box(seg.mask);
  const int r = cfg.roi_size;
  const ImageGrid img = crop_resize(image, box, r, r);
  ImageGrid mask_grid(seg.mask.height, seg.mask.width, 1);
  for (std::size_t i = 0; i < seg.mask.size(); ++i) mask_grid.data[i] = seg.mask.data[i];
  const ImageGrid fr = crop_resize(to_image(f), box, r, r);
  const ImageGrid mr = crop_resize(mask_grid, box, r, r);

  ImageGrid block(r, r, image.channels + 2);
  std::copy(img.data.begin(), img.data.end(), block.data.begin());
  std::copy(fr.data.begin(), fr.data.end(), block.plane(image.channels));
  std::copy(mr.data.begin(), mr.data.end(), block.plane(image.channels + 1));
  return block;
}

VerifyOutput head_output(const ImageGrid& out, int class_count) {
  if (out.channels != class_count + 2 || out.height != 1 || out.width != 1)
    throw DimensionError("head output must be (class_count + 2) x 1 x 1");
  VerifyOutput v;
  const double top = *std::max_element(out.data.begin(), out.data.begin() + class_count + 1);
  double z = 0.0;
  v.probabilities.resize(class_count + 1);
  for (int c = 0; c <= class_count; ++c) z += v.probabilities[c] = std::exp(out.data[c] - top);
  for (double& p : v.probabilities) p /= z;
  v.iou_raw = out.data[class_count + 1];
  v.s_iou = std::clamp(v.iou_raw, 0.0, 1.0);
  return v;
}

VerifyOutput verify_forward(const ParamSet& head, const ImageGrid& block, const VerifyConfig& cfg) {
  if (block.height != cfg.roi_size || block.width != cfg.roi_size)
    throw DimensionError("roi block does not match roi_size");
  return head_output(forward(head, block).output, cfg.class_count);
}

Detection make_detection(BinaryMask mask, const VerifyOutput& out, double alpha) {
  Detection d;
  d.mask = std::move(mask);
  int best = 1;
  for (int c = 2; c < static_cast<int>(out.probabilities.size()); ++c)
    if (out.probabilities[c] > out.probabilities[best]) best = c;
  d.cls = best;
  d.s_cls = out.probabilities[best];
  d.s_iou = out.s_iou;
  d.score = alpha * d.s_iou + (1.0 - alpha) * d.s_cls;
  return d;
}

std::vector<VerifyTarget> verify_train_targets(const std::vector<BinaryMask>& candidates, const GroundTruthMap& gt,
                                               const VerifyConfig& cfg) {
  const auto ids = gt.instance_ids();  // ascending, so strict '>' keeps the smallest id on ties
  std::vector<BinaryMask> gt_masks;
  for (auto id : ids) gt_masks.push_back(gt.instance_mask(id));
  std::vector<VerifyTarget> out;
  for (const auto& m : candidates) {
    VerifyTarget t;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const double iou = mask_iou(m, gt_masks[k]);
      if (iou > t.iou) {
        t.iou = iou;
        t.matched_id = ids[k];
      }
    }
    t.cls = (t.matched_id != 0 && t.iou >= cfg.match_iou_floor) ? gt.classes.at(t.matched_id) : kRejectClass;
    out.push_back(t);
  }
  return out;
}

std::vector<Detection> accept(const std::vector<Detection>& dets, const VerifyConfig& cfg) {
  std::vector<Detection> out;
  for (const auto& d : dets)
    if (d.cls != kRejectClass && d.score >= cfg.accept_threshold) out.push_back(d);
  return out;
}

ScoredMask to_scored(const Detection& d) { return {d.mask, d.cls, d.score}; }

std::vector<ScoredMask> to_scored(const std::vector<Detection>& dets) {
  std::vector<ScoredMask> out;
  out.reserve(dets.size());
  for (const auto& d : dets) out.push_back(to_scored(d));
  return out;
}

}  // namespace dvis
