#include "dvis/dataset.hpp"

#include <cstdio>

#include "dvis/config.hpp"
#include "dvis/io.hpp"

namespace dvis {

std::vector<DatasetEntry> write_dataset(const fs::path& dir, const SceneSource& src, const SceneConfig& cfg,
                                        std::uint64_t first_index) {
  fs::create_directories(dir);
  std::vector<DatasetEntry> entries;
  ojson scenes = ojson::array();
  for (std::size_t i = 0; i < src.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "scene_%05zu", i);
    DatasetEntry e{std::string(stem) + "_image.pfm", std::string(stem) + "_gt.pgm",
                   std::string(stem) + "_classes.json"};
    const SyntheticScene s = src.scene(i);
    write_pfm_image(dir / e.image, s.image);
    write_gt_map(dir / e.gt, dir / e.classes, s.gt);
    scenes.push_back({{"image", e.image}, {"gt", e.gt}, {"classes", e.classes}});
    entries.push_back(std::move(e));
  }
  write_json(dir / "dataset.json", {{"count", src.size()},
                                    {"first_index", first_index},
                                    {"scene_config", to_json(cfg)},
                                    {"scenes", scenes}});
  return entries;
}

DirectorySource::DirectorySource(const fs::path& dir) : dir_(dir) {
  const auto j = read_json(dir / "dataset.json");
  try {
    for (const auto& s : j.at("scenes"))
      entries_.push_back({s.at("image").get<std::string>(), s.at("gt").get<std::string>(),
                          s.at("classes").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed dataset manifest in " + dir.string() + ": " + e.what());
  }
}

SyntheticScene DirectorySource::scene(std::size_t i) const {
  const DatasetEntry& e = entries_.at(i);
  SyntheticScene s;
  s.image = read_pfm_image(dir_ / e.image);
  s.gt = read_gt_map(dir_ / e.gt, dir_ / e.classes);
  if (s.image.height != s.gt.height() || s.image.width != s.gt.width())
    throw DataError("image and GT sizes differ for " + e.image);
  return s;
}

}  // namespace dvis
