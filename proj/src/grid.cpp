#include "dvis/grid.hpp"

#include <cmath>
#include <set>
#include <string>

namespace dvis {

ImageGrid::ImageGrid(int h, int w, int c, double fill)
    : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, fill) {
  if (h < 1 || w < 1 || c < 1) throw DimensionError("image dimensions must be positive");
}

void ImageGrid::validate() const {
  if (height < 1 || width < 1 || channels < 1) throw DimensionError("image dimensions must be positive");
  if (data.size() != static_cast<std::size_t>(height) * width * channels)
    throw DimensionError("image data length does not match its dimensions");
  for (double v : data)
    if (!std::isfinite(v)) throw DomainError("image contains a non-finite value");
}

void GroundTruthMap::validate() const {
  for (std::uint32_t id : ids.data) {
    if (id != 0 && !classes.count(id))
      throw DataError("instance id " + std::to_string(id) + " has no class entry");
  }
}

std::vector<std::uint32_t> GroundTruthMap::instance_ids() const {
  std::set<std::uint32_t> seen;
  for (std::uint32_t id : ids.data)
    if (id != 0) seen.insert(id);
  return {seen.begin(), seen.end()};
}

BinaryMask GroundTruthMap::instance_mask(std::uint32_t id) const {
  BinaryMask m(ids.height, ids.width, 0);
  for (std::size_t i = 0; i < ids.size(); ++i) m.data[i] = ids.data[i] == id ? 1 : 0;
  return m;
}

GroundTruthMap resize_nearest(const GroundTruthMap& gt, int factor) {
  if (factor < 1) throw DomainError("resize factor must be positive");
  if (gt.height() % factor != 0 || gt.width() % factor != 0)
    throw DimensionError("resize factor " + std::to_string(factor) + " does not divide " +
                         std::to_string(gt.height()) + "x" + std::to_string(gt.width()));
  GroundTruthMap out(gt.height() / factor, gt.width() / factor);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out.ids.at(y, x) = gt.ids.at(y * factor, x * factor);
  for (std::uint32_t id : out.instance_ids()) {
    auto it = gt.classes.find(id);
    if (it != gt.classes.end()) out.classes[id] = it->second;
  }
  return out;
}

BinaryMask foreground_mask(const GroundTruthMap& gt) {
  BinaryMask m(gt.height(), gt.width(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = gt.ids.data[i] > 0 ? 1 : 0;
  return m;
}

BinaryMask upsample_mask(const BinaryMask& mask, int factor) {
  if (factor < 1) throw DomainError("upsample factor must be positive");
  BinaryMask out(mask.height * factor, mask.width * factor, 0);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out.at(y, x) = mask.at(y / factor, x / factor);
  return out;
}

RealLabelMap to_label_map(const ImageGrid& g) {
  if (g.channels != 1) throw DimensionError("label map requires a single-channel grid");
  RealLabelMap m(g.height, g.width);
  m.data = g.data;
  return m;
}

ImageGrid to_image(const RealLabelMap& map) {
  ImageGrid g(map.height, map.width, 1);
  g.data = map.data;
  return g;
}

std::size_t count_set(const BinaryMask& mask) {
  std::size_t n = 0;
  for (auto b : mask.data) n += b ? 1 : 0;
  return n;
}

int connected_components(const BinaryMask& mask) {
  std::vector<int> label(mask.size(), 0);
  std::vector<std::size_t> stack;
  int count = 0;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask.data[start] || label[start]) continue;
    ++count;
    label[start] = count;
    stack.push_back(start);
    while (!stack.empty()) {
      std::size_t p = stack.back();
      stack.pop_back();
      int y = static_cast<int>(p / mask.width), x = static_cast<int>(p % mask.width);
      const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        int ny = y + dy[k], nx = x + dx[k];
        if (!mask.contains(ny, nx)) continue;
        std::size_t q = mask.index(ny, nx);
        if (mask.data[q] && !label[q]) {
          label[q] = count;
          stack.push_back(q);
        }
      }
    }
  }
  return count;
}

GroundTruthMap relabel(const GroundTruthMap& gt, const std::map<std::uint32_t, std::uint32_t>& mapping) {
  GroundTruthMap out = gt;
  out.classes.clear();
  for (auto& id : out.ids.data) {
    if (id == 0) continue;
    auto it = mapping.find(id);
    if (it == mapping.end()) throw DataError("relabel mapping misses id " + std::to_string(id));
    id = it->second;
  }
  for (auto [id, cls] : gt.classes) {
    auto it = mapping.find(id);
    if (it != mapping.end()) out.classes[it->second] = cls;
  }
  return out;
}

}  // namespace dvis
