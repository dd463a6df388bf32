#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dvis/grid.hpp"
#include "dvis/tinynet.hpp"
#include "dvis/verify.hpp"

namespace dvis {

namespace fs = std::filesystem;

// ---- Portable float map -------------------------------------------------------
// "Pf" (one channel) or "PF" (three channels), little-endian (scale -1.0),
// rows stored bottom to top as the format prescribes. Values are float32, so a
// map round-trips exactly when its values are representable as float.
void write_pfm(const fs::path& path, const RealLabelMap& map);
RealLabelMap read_pfm(const fs::path& path);
void write_pfm_image(const fs::path& path, const ImageGrid& image);
ImageGrid read_pfm_image(const fs::path& path);

// ---- Ground truth -------------------------------------------------------------
// 16-bit binary PGM ("P5", maxval 65535, big-endian samples) plus a JSON sidecar
// {"<id>": class}. Background needs no class entry.
void write_gt_map(const fs::path& pgm_path, const fs::path& classes_path, const GroundTruthMap& gt);
GroundTruthMap read_gt_map(const fs::path& pgm_path, const fs::path& classes_path);

// ---- 8-bit color output -------------------------------------------------------
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;  // interleaved RGB, row-major
  std::array<std::uint8_t, 3> pixel(int y, int x) const;
};

void write_ppm(const fs::path& path, const RgbImage& img);
RgbImage read_ppm(const fs::path& path);

// Perceptual (viridis-like) colormap on t in [0, 1].
std::array<std::uint8_t, 3> colormap(double t);

// Values mapped linearly from [0, max(f)] onto the colormap.
RgbImage render_label_map(const RealLabelMap& f);

// Image (or black) with every detection tinted by its own hue.
RgbImage render_detections(const ImageGrid* image, const std::vector<Detection>& dets, int height, int width);

RgbImage to_rgb(const ImageGrid& image);

// ---- Run-length masks ---------------------------------------------------------
// Row-major alternating run lengths, starting with a (possibly empty) background run.
std::vector<std::uint32_t> rle_encode(const BinaryMask& mask);
BinaryMask rle_decode(const std::vector<std::uint32_t>& runs, int height, int width);

nlohmann::ordered_json detections_to_json(const std::vector<Detection>& dets);
std::vector<Detection> detections_from_json(const nlohmann::json& j);

nlohmann::ordered_json candidates_to_json(const std::vector<CandidateSegment>& cands);

// ---- Checkpoints --------------------------------------------------------------
// "DVISCKPT1" magic, then tagged little-endian sections NCFG, PRMS, OPTS, STEP,
// each as a 4-byte tag, a u64 payload length and the payload.
struct Checkpoint {
  ParamSet params;
  OptState opt;
  std::uint64_t step = 0;
};

void write_checkpoint(const fs::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const fs::path& path);

// ---- Misc -----------------------------------------------------------------------
nlohmann::json read_json(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::ordered_json& j);
void write_text(const fs::path& path, const std::string& text);

}  // namespace dvis
