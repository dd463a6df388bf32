#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "dvis/error.hpp"

namespace dvis {

// Dense row-major 2-D array.
template <class T>
struct Plane {
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Plane() = default;
  Plane(int h, int w, T fill = T{}) : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {
    if (h < 1 || w < 1) throw DimensionError("plane dimensions must be positive");
  }

  std::size_t size() const { return data.size(); }
  std::size_t index(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }
  T& at(int y, int x) { return data[index(y, x)]; }
  const T& at(int y, int x) const { return data[index(y, x)]; }
  bool contains(int y, int x) const { return y >= 0 && y < height && x >= 0 && x < width; }
  bool same_shape(int h, int w) const { return height == h && width == w; }

  template <class U>
  bool same_shape(const Plane<U>& o) const {
    return height == o.height && width == o.width;
  }

  bool operator==(const Plane&) const = default;
};

// Predicted real-valued instance label field.
using RealLabelMap = Plane<double>;

// One bit (stored as a byte) per pixel.
using BinaryMask = Plane<std::uint8_t>;

// Multi-channel image, channel-planar: data[(c * height + y) * width + x].
// Also used for intermediate feature maps inside the predictor.
struct ImageGrid {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  ImageGrid() = default;
  ImageGrid(int h, int w, int c, double fill = 0.0);

  std::size_t size() const { return data.size(); }
  double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double* plane(int c) { return data.data() + static_cast<std::size_t>(c) * height * width; }
  const double* plane(int c) const { return data.data() + static_cast<std::size_t>(c) * height * width; }

  // Throws DimensionError / DomainError if the invariants do not hold.
  void validate() const;

  bool operator==(const ImageGrid&) const = default;
};

// Integer instance ids (0 = background) plus the class of every positive id.
// Ids carry no ordering semantics.
struct GroundTruthMap {
  Plane<std::uint32_t> ids;
  std::map<std::uint32_t, int> classes;

  GroundTruthMap() = default;
  GroundTruthMap(int h, int w) : ids(h, w, 0) {}

  int height() const { return ids.height; }
  int width() const { return ids.width; }

  // Every positive id present in `ids` must have a class entry.
  void validate() const;

  // Sorted positive ids present in the map.
  std::vector<std::uint32_t> instance_ids() const;

  BinaryMask instance_mask(std::uint32_t id) const;

  bool operator==(const GroundTruthMap&) const = default;
};

GroundTruthMap resize_nearest(const GroundTruthMap& gt, int factor);

BinaryMask foreground_mask(const GroundTruthMap& gt);

// Nearest-neighbour upsampling of a mask by an integer factor.
BinaryMask upsample_mask(const BinaryMask& mask, int factor);

RealLabelMap to_label_map(const ImageGrid& single_channel);
ImageGrid to_image(const RealLabelMap& map);

std::size_t count_set(const BinaryMask& mask);

// Number of 4-connected components of the set pixels.
int connected_components(const BinaryMask& mask);

// Applies `mapping` to every positive id (and the class table). Background stays 0.
GroundTruthMap relabel(const GroundTruthMap& gt, const std::map<std::uint32_t, std::uint32_t>& mapping);

}  // namespace dvis
