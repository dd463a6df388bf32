#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dvis/synthgen.hpp"

namespace dvis {

// On-disk dataset: dataset.json plus, per scene, an image PFM ("PF", 3 channels),
// a 16-bit id PGM and a classes JSON sidecar.
struct DatasetEntry {
  std::string image;
  std::string gt;
  std::string classes;
};

// Writes every scene of `src` into dir and returns the manifest entries.
std::vector<DatasetEntry> write_dataset(const std::filesystem::path& dir, const SceneSource& src,
                                        const SceneConfig& cfg, std::uint64_t first_index);

// Reads a directory written by write_dataset. Instance metadata is not stored,
// so loaded scenes carry an empty `instances` list.
class DirectorySource : public SceneSource {
 public:
  explicit DirectorySource(const std::filesystem::path& dir);
  std::size_t size() const override { return entries_.size(); }
  SyntheticScene scene(std::size_t i) const override;

 private:
  std::filesystem::path dir_;
  std::vector<DatasetEntry> entries_;
};

}  // namespace dvis
