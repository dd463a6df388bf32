#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dvis/grid.hpp"

namespace dvis {

enum class ShapeClass { disk = 1, rectangle = 2, triangle = 3 };

constexpr int kShapeClassCount = 3;

std::string to_string(ShapeClass c);
ShapeClass shape_class_from_string(const std::string& name);

struct SceneConfig {
  int height = 64;
  int width = 64;
  int min_instances = 2;
  int max_instances = 8;
  std::vector<ShapeClass> shape_classes{ShapeClass::disk, ShapeClass::rectangle, ShapeClass::triangle};
  double occluder_prob = 0.5;
  double noise_std = 0.05;
  double background_amplitude = 0.08;
  // Probability that a shape reuses the color of an earlier shape of the same class.
  double color_collision_prob = 0.3;
  double radius_min = 7.0;
  double radius_max = 12.0;
  int min_visible_pixels = 30;
  std::uint64_t seed = 0;
  // Seed of the id permutation only; changing it relabels ids without moving pixels.
  std::uint64_t label_seed = 0;

  void validate() const;
};

struct InstanceInfo {
  std::uint32_t id = 0;
  ShapeClass shape = ShapeClass::disk;
  int color_index = 0;
  double center_y = 0.0;
  double center_x = 0.0;
  double radius = 0.0;
  bool occluded = false;  // split by an occluder bar
};

struct SyntheticScene {
  ImageGrid image;  // 3 channels in [0, 1]
  GroundTruthMap gt;
  std::vector<InstanceInfo> instances;  // in drawing order (back to front)
};

SyntheticScene generate(const SceneConfig& cfg, std::uint64_t index);

// Indexed, read-only collection of scenes.
class SceneSource {
 public:
  virtual ~SceneSource() = default;
  virtual std::size_t size() const = 0;
  virtual SyntheticScene scene(std::size_t i) const = 0;
};

// Scenes generate(cfg, first_index + i) for i < count.
class SyntheticSource : public SceneSource {
 public:
  SyntheticSource(SceneConfig cfg, std::size_t count, std::uint64_t first_index = 0);
  std::size_t size() const override { return count_; }
  SyntheticScene scene(std::size_t i) const override;
  const SceneConfig& config() const { return cfg_; }

 private:
  SceneConfig cfg_;
  std::size_t count_;
  std::uint64_t first_;
};

class VectorSource : public SceneSource {
 public:
  explicit VectorSource(std::vector<SyntheticScene> scenes) : scenes_(std::move(scenes)) {}
  std::size_t size() const override { return scenes_.size(); }
  SyntheticScene scene(std::size_t i) const override { return scenes_.at(i); }

 private:
  std::vector<SyntheticScene> scenes_;
};

// Materializes every scene of `src` in memory.
VectorSource cache_scenes(const SceneSource& src);

}  // namespace dvis
