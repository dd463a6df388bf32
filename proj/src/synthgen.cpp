#include "dvis/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "dvis/rng.hpp"

namespace dvis {

namespace {

using Color = std::array<double, 3>;

constexpr std::array<Color, 8> kPalette{{
    {0.90, 0.15, 0.15},
    {0.15, 0.80, 0.20},
    {0.20, 0.30, 0.95},
    {0.95, 0.90, 0.20},
    {0.90, 0.20, 0.85},
    {0.15, 0.85, 0.90},
    {0.95, 0.55, 0.10},
    {0.97, 0.97, 0.97},
}};

constexpr Color kBackground{0.40, 0.40, 0.40};

struct Shape {
  ShapeClass kind;
  double cy, cx, r;
  double half_h, half_w;  // rectangle
  double angle;           // triangle
};

bool inside(const Shape& s, double py, double px) {
  const double dy = py - s.cy, dx = px - s.cx;
  switch (s.kind) {
    case ShapeClass::disk:
      return dy * dy + dx * dx <= s.r * s.r;
    case ShapeClass::rectangle:
      return std::abs(dy) <= s.half_h && std::abs(dx) <= s.half_w;
    case ShapeClass::triangle: {
      double vy[3], vx[3];
      for (int k = 0; k < 3; ++k) {
        const double a = s.angle + 2.0 * std::numbers::pi * k / 3.0;
        vy[k] = s.cy + s.r * std::sin(a);
        vx[k] = s.cx + s.r * std::cos(a);
      }
      bool neg = false, pos = false;
      for (int k = 0; k < 3; ++k) {
        const int j = (k + 1) % 3;
        const double cross = (vx[j] - vx[k]) * (py - vy[k]) - (vy[j] - vy[k]) * (px - vx[k]);
        neg |= cross < 0.0;
        pos |= cross > 0.0;
      }
      return !(neg && pos);
    }
  }
  return false;
}

std::vector<int> visible_counts(const Plane<int>& canvas, int n) {
  std::vector<int> counts(n, 0);
  for (int v : canvas.data)
    if (v > 0) ++counts[v - 1];
  return counts;
}

bool all_visible(const Plane<int>& canvas, int n, int min_pixels) {
  auto counts = visible_counts(canvas, n);
  return std::all_of(counts.begin(), counts.end(), [&](int c) { return c >= min_pixels; });
}

}  // namespace

std::string to_string(ShapeClass c) {
  switch (c) {
    case ShapeClass::disk:
      return "disk";
    case ShapeClass::rectangle:
      return "rectangle";
    case ShapeClass::triangle:
      return "triangle";
  }
  return "unknown";
}

ShapeClass shape_class_from_string(const std::string& name) {
  if (name == "disk") return ShapeClass::disk;
  if (name == "rectangle") return ShapeClass::rectangle;
  if (name == "triangle") return ShapeClass::triangle;
  throw DomainError("unknown shape class '" + name + "'");
}

void SceneConfig::validate() const {
  if (height < 8 || width < 8) throw DomainError("scene must be at least 8x8");
  if (min_instances < 1 || max_instances < min_instances) throw DomainError("invalid instance count range");
  if (shape_classes.empty()) throw DomainError("scene needs at least one shape class");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(occluder_prob) || !prob(color_collision_prob)) throw DomainError("probabilities must be in [0, 1]");
  if (noise_std < 0.0 || background_amplitude < 0.0) throw DomainError("noise and texture must be >= 0");
  if (!(radius_min > 1.0) || radius_max < radius_min) throw DomainError("invalid radius range");
  if (min_visible_pixels < 1) throw DomainError("min_visible_pixels must be >= 1");
}

SyntheticScene generate(const SceneConfig& cfg, std::uint64_t index) {
  cfg.validate();
  Rng rng(counter_hash(cfg.seed, 0, index));
  const int h = cfg.height, w = cfg.width;
  const int wanted = rng.range(cfg.min_instances, cfg.max_instances);

  Plane<int> canvas(h, w, 0);  // drawing order + 1, 0 = background
  std::vector<Shape> shapes;
  std::vector<int> colors;

  for (int k = 0; k < wanted; ++k) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      Shape s{};
      s.kind = cfg.shape_classes[rng.below(cfg.shape_classes.size())];
      s.r = rng.uniform(cfg.radius_min, cfg.radius_max);
      s.cy = rng.uniform(0.0, h);
      s.cx = rng.uniform(0.0, w);
      s.half_h = s.r * rng.uniform(0.6, 1.0);
      s.half_w = s.r * rng.uniform(0.6, 1.0);
      s.angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      Plane<int> trial = canvas;
      const int label = static_cast<int>(shapes.size()) + 1;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if (inside(s, y + 0.5, x + 0.5)) trial.at(y, x) = label;
      if (!all_visible(trial, label, cfg.min_visible_pixels)) continue;
      canvas = std::move(trial);
      shapes.push_back(s);
      break;
    }
  }
  if (shapes.empty()) {
    // A centered disk of maximal radius always fits on an empty canvas.
    Shape s{ShapeClass::disk, h / 2.0, w / 2.0, cfg.radius_max, 0, 0, 0};
    s.kind = cfg.shape_classes.front();
    s.half_h = s.half_w = s.r;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (inside(s, y + 0.5, x + 0.5)) canvas.at(y, x) = 1;
    shapes.push_back(s);
  }
  const int n = static_cast<int>(shapes.size());

  // Colors: distinct palette entries, except that a shape may reuse the color
  // of an earlier shape of the same class.
  std::vector<int> unused(kPalette.size());
  for (std::size_t i = 0; i < unused.size(); ++i) unused[i] = static_cast<int>(i);
  rng.shuffle(unused);
  for (int k = 0; k < n; ++k) {
    std::vector<int> same_class;
    for (int j = 0; j < k; ++j)
      if (shapes[j].kind == shapes[k].kind) same_class.push_back(colors[j]);
    const bool collide = !same_class.empty() && rng.bernoulli(cfg.color_collision_prob);
    if (collide) {
      colors.push_back(same_class[rng.below(same_class.size())]);
    } else if (!unused.empty()) {
      colors.push_back(unused.back());
      unused.pop_back();
    } else {
      colors.push_back(static_cast<int>(rng.below(kPalette.size())));
    }
  }

  // Optional background-colored bar splitting one instance into pieces.
  std::vector<bool> occluded(n, false);
  if (rng.bernoulli(cfg.occluder_prob)) {
    std::vector<int> order(n);
    for (int k = 0; k < n; ++k) order[k] = k;
    rng.shuffle(order);
    bool placed = false;
    for (int target : order) {
      if (placed) break;
      for (int attempt = 0; attempt < 20 && !placed; ++attempt) {
        const int label = target + 1;
        double sy = 0, sx = 0;
        int cnt = 0, y0 = h, y1 = -1, x0 = w, x1 = -1;
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            if (canvas.at(y, x) == label) {
              sy += y;
              sx += x;
              ++cnt;
              y0 = std::min(y0, y), y1 = std::max(y1, y);
              x0 = std::min(x0, x), x1 = std::max(x1, x);
            }
        if (cnt == 0) break;
        const double cy = sy / cnt + rng.uniform(-1.5, 1.5);
        const double cx = sx / cnt + rng.uniform(-1.5, 1.5);
        const double half_t = rng.uniform(1.5, 2.5);
        const bool horizontal = rng.bernoulli(0.5);
        Plane<int> trial = canvas;
        for (int y = std::max(0, y0 - 2); y <= std::min(h - 1, y1 + 2); ++y)
          for (int x = std::max(0, x0 - 2); x <= std::min(w - 1, x1 + 2); ++x) {
            const double d = horizontal ? std::abs(y + 0.5 - cy) : std::abs(x + 0.5 - cx);
            if (d <= half_t) trial.at(y, x) = 0;
          }
        BinaryMask m(h, w, 0);
        for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = trial.data[i] == label ? 1 : 0;
        if (connected_components(m) < 2 || !all_visible(trial, n, cfg.min_visible_pixels)) continue;
        canvas = std::move(trial);
        occluded[target] = true;
        placed = true;
      }
    }
  }

  // Ids: a fresh permutation of 1..n.
  Rng label_rng(counter_hash(cfg.seed, 1 + cfg.label_seed, index));
  std::vector<std::uint32_t> ids(n);
  for (int k = 0; k < n; ++k) ids[k] = static_cast<std::uint32_t>(k + 1);
  label_rng.shuffle(ids);

  SyntheticScene scene;
  scene.gt = GroundTruthMap(h, w);
  for (std::size_t i = 0; i < canvas.size(); ++i)
    scene.gt.ids.data[i] = canvas.data[i] > 0 ? ids[canvas.data[i] - 1] : 0;
  for (int k = 0; k < n; ++k) {
    scene.gt.classes[ids[k]] = static_cast<int>(shapes[k].kind);
    scene.instances.push_back(
        {ids[k], shapes[k].kind, colors[k], shapes[k].cy, shapes[k].cx, shapes[k].r, static_cast<bool>(occluded[k])});
  }

  scene.image = ImageGrid(h, w, 3, 0.0);
  const double fy = rng.uniform(0.02, 0.12), fx = rng.uniform(0.02, 0.12), phase = rng.uniform(0.0, 6.283);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int label = canvas.at(y, x);
      const double texture = cfg.background_amplitude * std::sin(2.0 * std::numbers::pi * (fy * y + fx * x) + phase);
      for (int c = 0; c < 3; ++c) {
        double v = label > 0 ? kPalette[colors[label - 1]][c] : kBackground[c] + texture;
        if (cfg.noise_std > 0.0) v += cfg.noise_std * rng.normal();
        scene.image.at(c, y, x) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return scene;
}

SyntheticSource::SyntheticSource(SceneConfig cfg, std::size_t count, std::uint64_t first_index)
    : cfg_(std::move(cfg)), count_(count), first_(first_index) {
  cfg_.validate();
}

SyntheticScene SyntheticSource::scene(std::size_t i) const {
  if (i >= count_) throw DimensionError("scene index out of range");
  return generate(cfg_, first_ + i);
}

VectorSource cache_scenes(const SceneSource& src) {
  std::vector<SyntheticScene> scenes;
  scenes.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) scenes.push_back(src.scene(i));
  return VectorSource(std::move(scenes));
}

}  // namespace dvis
