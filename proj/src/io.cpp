#include "dvis/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace dvis {

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

// Netpbm-style header reader: whitespace separated tokens, '#' comments,
// exactly one whitespace byte before the payload.
class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<std::uint8_t>& b, std::string name) : b_(b), name_(std::move(name)) {}

  std::string token() {
    skip_space();
    std::string t;
    while (pos_ < b_.size() && !std::isspace(b_[pos_])) t.push_back(static_cast<char>(b_[pos_++]));
    if (t.empty()) throw DataError(name_ + ": truncated header");
    return t;
  }

  long integer() {
    const std::string t = token();
    char* end = nullptr;
    long v = std::strtol(t.c_str(), &end, 10);
    if (*end != '\0') throw DataError(name_ + ": malformed header field '" + t + "'");
    return v;
  }

  // Consumes the single whitespace byte ending the header.
  std::size_t payload_start() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_])) throw DataError(name_ + ": malformed header terminator");
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(b_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& b_;
  std::string name_;
  std::size_t pos_ = 0;
};

// PFM's header is line based: "Pf\nW H\nscale\n".
struct PfmHeader {
  int channels = 1;
  int width = 0;
  int height = 0;
  bool little_endian = true;
  std::size_t payload = 0;
};

PfmHeader parse_pfm_header(const std::vector<std::uint8_t>& b, const fs::path& path) {
  std::size_t pos = 0;
  auto line = [&]() {
    std::string s;
    while (pos < b.size() && b[pos] != '\n') s.push_back(static_cast<char>(b[pos++]));
    if (pos >= b.size()) throw DataError(path.string() + ": truncated PFM header");
    ++pos;
    return s;
  };
  PfmHeader h;
  const std::string magic = line();
  if (magic == "Pf") h.channels = 1;
  else if (magic == "PF") h.channels = 3;
  else throw DataError(path.string() + ": not a PFM file (magic '" + magic + "')");
  std::istringstream dims(line());
  if (!(dims >> h.width >> h.height) || h.width < 1 || h.height < 1)
    throw DataError(path.string() + ": malformed PFM dimensions");
  std::istringstream sc(line());
  double scale = 0.0;
  if (!(sc >> scale) || scale == 0.0 || !std::isfinite(scale)) throw DataError(path.string() + ": malformed PFM scale");
  h.little_endian = scale < 0.0;
  h.payload = pos;
  const std::size_t need = static_cast<std::size_t>(h.width) * h.height * h.channels * 4;
  if (b.size() - pos < need) throw DataError(path.string() + ": truncated PFM payload");
  return h;
}

void put_f32_le(std::vector<std::uint8_t>& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
}

float get_f32(const std::uint8_t* p, bool little) {
  std::uint32_t bits = 0;
  for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(little ? p[k] : p[3 - k]) << (8 * k);
  return std::bit_cast<float>(bits);
}

std::string pfm_header(const char* magic, int w, int h) {
  return std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n-1.0\n";
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}
void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class ByteReader {
 public:
  ByteReader(const std::uint8_t* p, std::size_t n, std::string what) : p_(p), n_(n), what_(std::move(what)) {}
  std::uint64_t u(int bytes) {
    need(bytes);
    std::uint64_t v = 0;
    for (int k = 0; k < bytes; ++k) v |= static_cast<std::uint64_t>(p_[pos_ + k]) << (8 * k);
    pos_ += bytes;
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(u(4)); }
  std::uint64_t u64() { return u(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  void need(std::size_t k) const {
    if (pos_ + k > n_) throw DataError(what_ + ": truncated section");
  }
  bool done() const { return pos_ == n_; }

 private:
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
  std::string what_;
};

void put_tensor(std::vector<std::uint8_t>& out, const Tensor& t) {
  put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
  for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : t.data) put_f64(out, v);
}

Tensor get_tensor(ByteReader& r) {
  const std::uint32_t rank = r.u32();
  if (rank > 8) throw DataError("checkpoint: implausible tensor rank");
  std::vector<int> shape;
  for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(static_cast<int>(r.u32()));
  Tensor t(shape);
  r.need(t.data.size() * 8);
  for (double& v : t.data) v = r.f64();
  return t;
}

void put_layers(std::vector<std::uint8_t>& out, const std::vector<LayerParams>& layers) {
  put_u32(out, static_cast<std::uint32_t>(layers.size()));
  for (const auto& l : layers) {
    put_tensor(out, l.weight);
    put_tensor(out, l.bias);
  }
}

std::vector<LayerParams> get_layers(ByteReader& r) {
  const std::uint32_t n = r.u32();
  std::vector<LayerParams> layers(n);
  for (auto& l : layers) {
    l.weight = get_tensor(r);
    l.bias = get_tensor(r);
  }
  return layers;
}

void put_section(std::vector<std::uint8_t>& out, const char (&tag)[5], const std::vector<std::uint8_t>& payload) {
  out.insert(out.end(), tag, tag + 4);
  put_u64(out, payload.size());
  out.insert(out.end(), payload.begin(), payload.end());
}

constexpr char kCheckpointMagic[] = "DVISCKPT1";

}  // namespace

// ---- PFM ------------------------------------------------------------------------

void write_pfm(const fs::path& path, const RealLabelMap& map) {
  const std::string header = pfm_header("Pf", map.width, map.height);
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (int y = map.height - 1; y >= 0; --y)
    for (int x = 0; x < map.width; ++x) put_f32_le(out, static_cast<float>(map.at(y, x)));
  write_bytes(path, out);
}

RealLabelMap read_pfm(const fs::path& path) {
  const auto b = read_bytes(path);
  const auto h = parse_pfm_header(b, path);
  if (h.channels != 1) throw DataError(path.string() + ": expected a grayscale (Pf) map");
  RealLabelMap m(h.height, h.width);
  const std::uint8_t* p = b.data() + h.payload;
  for (int y = h.height - 1; y >= 0; --y)
    for (int x = 0; x < h.width; ++x, p += 4) m.at(y, x) = get_f32(p, h.little_endian);
  return m;
}

void write_pfm_image(const fs::path& path, const ImageGrid& image) {
  if (image.channels != 1 && image.channels != 3) throw DimensionError("PFM stores 1 or 3 channels");
  const std::string header = pfm_header(image.channels == 1 ? "Pf" : "PF", image.width, image.height);
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (int y = image.height - 1; y >= 0; --y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < image.channels; ++c) put_f32_le(out, static_cast<float>(image.at(c, y, x)));
  write_bytes(path, out);
}

ImageGrid read_pfm_image(const fs::path& path) {
  const auto b = read_bytes(path);
  const auto h = parse_pfm_header(b, path);
  ImageGrid g(h.height, h.width, h.channels);
  const std::uint8_t* p = b.data() + h.payload;
  for (int y = h.height - 1; y >= 0; --y)
    for (int x = 0; x < h.width; ++x)
      for (int c = 0; c < h.channels; ++c, p += 4) g.at(c, y, x) = get_f32(p, h.little_endian);
  return g;
}

// ---- GT maps ------------------------------------------------------------------

void write_gt_map(const fs::path& pgm_path, const fs::path& classes_path, const GroundTruthMap& gt) {
  gt.validate();
  const std::string header =
      "P5\n" + std::to_string(gt.width()) + " " + std::to_string(gt.height()) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (std::uint32_t id : gt.ids.data) {
    if (id > 65535) throw DataError("instance id " + std::to_string(id) + " exceeds 16 bits");
    out.push_back(static_cast<std::uint8_t>(id >> 8));
    out.push_back(static_cast<std::uint8_t>(id & 0xff));
  }
  write_bytes(pgm_path, out);
  nlohmann::ordered_json classes = nlohmann::ordered_json::object();
  for (auto [id, cls] : gt.classes) classes[std::to_string(id)] = cls;
  write_json(classes_path, classes);
}

GroundTruthMap read_gt_map(const fs::path& pgm_path, const fs::path& classes_path) {
  const auto b = read_bytes(pgm_path);
  HeaderReader hr(b, pgm_path.string());
  if (hr.token() != "P5") throw DataError(pgm_path.string() + ": not a binary PGM (P5)");
  const long w = hr.integer(), h = hr.integer(), maxval = hr.integer();
  if (w < 1 || h < 1) throw DataError(pgm_path.string() + ": bad dimensions");
  if (maxval != 65535) throw DataError(pgm_path.string() + ": maxval must be 65535, got " + std::to_string(maxval));
  const std::size_t start = hr.payload_start();
  const std::size_t need = static_cast<std::size_t>(w) * h * 2;
  if (b.size() - start < need) throw DataError(pgm_path.string() + ": truncated PGM payload");
  GroundTruthMap gt(static_cast<int>(h), static_cast<int>(w));
  for (std::size_t i = 0; i < gt.ids.size(); ++i)
    gt.ids.data[i] = (static_cast<std::uint32_t>(b[start + 2 * i]) << 8) | b[start + 2 * i + 1];
  const auto classes = read_json(classes_path);
  if (!classes.is_object()) throw DataError(classes_path.string() + ": expected an object of id -> class");
  for (auto it = classes.begin(); it != classes.end(); ++it) {
    try {
      gt.classes[static_cast<std::uint32_t>(std::stoul(it.key()))] = it.value().get<int>();
    } catch (const std::exception&) {
      throw DataError(classes_path.string() + ": malformed entry '" + it.key() + "'");
    }
  }
  gt.validate();
  return gt;
}

// ---- PPM and rendering -----------------------------------------------------------

std::array<std::uint8_t, 3> RgbImage::pixel(int y, int x) const {
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  return {data[i], data[i + 1], data[i + 2]};
}

void write_ppm(const fs::path& path, const RgbImage& img) {
  const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.data.begin(), img.data.end());
  write_bytes(path, out);
}

RgbImage read_ppm(const fs::path& path) {
  const auto b = read_bytes(path);
  HeaderReader hr(b, path.string());
  if (hr.token() != "P6") throw DataError(path.string() + ": not a binary PPM (P6)");
  RgbImage img;
  img.width = static_cast<int>(hr.integer());
  img.height = static_cast<int>(hr.integer());
  if (hr.integer() != 255) throw DataError(path.string() + ": only maxval 255 is supported");
  const std::size_t start = hr.payload_start();
  const std::size_t need = static_cast<std::size_t>(img.width) * img.height * 3;
  if (img.width < 1 || img.height < 1 || b.size() - start < need) throw DataError(path.string() + ": truncated PPM");
  img.data.assign(b.begin() + static_cast<std::ptrdiff_t>(start), b.begin() + static_cast<std::ptrdiff_t>(start + need));
  return img;
}

std::array<std::uint8_t, 3> colormap(double t) {
  static constexpr std::array<std::array<double, 3>, 9> anchors{{
      {68, 1, 84},
      {72, 40, 120},
      {62, 74, 137},
      {49, 104, 142},
      {38, 130, 142},
      {31, 158, 137},
      {53, 183, 121},
      {109, 205, 89},
      {253, 231, 37},
  }};
  if (!std::isfinite(t)) t = 0.0;
  t = std::clamp(t, 0.0, 1.0) * (anchors.size() - 1);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(t), anchors.size() - 2);
  const double a = t - static_cast<double>(k);
  std::array<std::uint8_t, 3> rgb{};
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<std::uint8_t>(std::lround((1.0 - a) * anchors[k][c] + a * anchors[k + 1][c]));
  return rgb;
}

RgbImage render_label_map(const RealLabelMap& f) {
  RgbImage img{f.height, f.width, std::vector<std::uint8_t>(f.size() * 3)};
  double top = 0.0;
  for (double v : f.data) top = std::max(top, v);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto rgb = colormap(top > 0.0 ? f.data[i] / top : 0.0);
    std::copy(rgb.begin(), rgb.end(), img.data.begin() + static_cast<std::ptrdiff_t>(3 * i));
  }
  return img;
}

RgbImage to_rgb(const ImageGrid& image) {
  RgbImage img{image.height, image.width, std::vector<std::uint8_t>(static_cast<std::size_t>(image.height) * image.width * 3)};
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = image.at(std::min(c, image.channels - 1), y, x);
        img.data[(static_cast<std::size_t>(y) * image.width + x) * 3 + c] =
            static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
  return img;
}

RgbImage render_detections(const ImageGrid* image, const std::vector<Detection>& dets, int height, int width) {
  RgbImage img = image ? to_rgb(*image) : RgbImage{height, width, std::vector<std::uint8_t>(
                                                                     static_cast<std::size_t>(height) * width * 3, 0)};
  for (std::size_t k = 0; k < dets.size(); ++k) {
    const auto& m = dets[k].mask;
    if (m.height != img.height || m.width != img.width) throw DimensionError("detection mask does not match the image");
    // Golden-angle hue steps keep neighbouring ids apart.
    const double hue = std::fmod(static_cast<double>(k) * 0.618033988749895, 1.0) * 6.0;
    const int sector = static_cast<int>(hue);
    const double frac = hue - sector;
    double rgb[3];
    switch (sector) {
      case 0: rgb[0] = 1, rgb[1] = frac, rgb[2] = 0; break;
      case 1: rgb[0] = 1 - frac, rgb[1] = 1, rgb[2] = 0; break;
      case 2: rgb[0] = 0, rgb[1] = 1, rgb[2] = frac; break;
      case 3: rgb[0] = 0, rgb[1] = 1 - frac, rgb[2] = 1; break;
      case 4: rgb[0] = frac, rgb[1] = 0, rgb[2] = 1; break;
      default: rgb[0] = 1, rgb[1] = 0, rgb[2] = 1 - frac; break;
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!m.data[i]) continue;
      for (int c = 0; c < 3; ++c) {
        auto& px = img.data[3 * i + c];
        px = static_cast<std::uint8_t>(std::lround(0.4 * px + 0.6 * 255.0 * rgb[c]));
      }
    }
  }
  return img;
}

// ---- RLE and detection JSON -----------------------------------------------------

std::vector<std::uint32_t> rle_encode(const BinaryMask& mask) {
  std::vector<std::uint32_t> runs;
  std::uint8_t current = 0;
  std::uint32_t len = 0;
  for (auto b : mask.data) {
    const std::uint8_t v = b ? 1 : 0;
    if (v != current) {
      runs.push_back(len);
      current = v;
      len = 0;
    }
    ++len;
  }
  runs.push_back(len);
  return runs;
}

BinaryMask rle_decode(const std::vector<std::uint32_t>& runs, int height, int width) {
  BinaryMask m(height, width, 0);
  std::size_t pos = 0;
  std::uint8_t v = 0;
  for (auto r : runs) {
    if (pos + r > m.size()) throw DataError("RLE runs exceed the mask size");
    std::fill_n(m.data.begin() + static_cast<std::ptrdiff_t>(pos), r, v);
    pos += r;
    v ^= 1;
  }
  if (pos != m.size()) throw DataError("RLE runs do not cover the mask");
  return m;
}

nlohmann::ordered_json detections_to_json(const std::vector<Detection>& dets) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& d : dets) {
    nlohmann::ordered_json j;
    j["class"] = d.cls;
    j["score"] = d.score;
    j["s_cls"] = d.s_cls;
    j["s_iou"] = d.s_iou;
    j["mask"] = {{"height", d.mask.height}, {"width", d.mask.width}, {"rle", rle_encode(d.mask)}};
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<Detection> detections_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw DataError("detections JSON must be an array");
  std::vector<Detection> out;
  try {
    for (const auto& e : j) {
      Detection d;
      d.cls = e.at("class").get<int>();
      d.score = e.at("score").get<double>();
      d.s_cls = e.at("s_cls").get<double>();
      d.s_iou = e.at("s_iou").get<double>();
      const auto& m = e.at("mask");
      d.mask = rle_decode(m.at("rle").get<std::vector<std::uint32_t>>(), m.at("height").get<int>(),
                          m.at("width").get<int>());
      out.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed detections JSON: ") + e.what());
  }
  return out;
}

nlohmann::ordered_json candidates_to_json(const std::vector<CandidateSegment>& cands) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& c : cands) {
    nlohmann::ordered_json j;
    j["mean_value"] = c.mean_value;
    j["bandwidth"] = c.bandwidth;
    j["pixels"] = count_set(c.mask);
    j["mask"] = {{"height", c.mask.height}, {"width", c.mask.width}, {"rle", rle_encode(c.mask)}};
    arr.push_back(std::move(j));
  }
  return arr;
}

// ---- Checkpoints ------------------------------------------------------------------

void write_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + 9);

  const NetConfig& cfg = ckpt.params.config;
  std::vector<std::uint8_t> ncfg;
  put_u32(ncfg, static_cast<std::uint32_t>(cfg.input_channels));
  put_u64(ncfg, cfg.init_seed);
  put_u32(ncfg, static_cast<std::uint32_t>(cfg.layers.size()));
  for (const auto& l : cfg.layers) {
    for (int v : {static_cast<int>(l.kind), l.kernel, l.in_channels, l.out_channels, l.stride, l.factor})
      put_u32(ncfg, static_cast<std::uint32_t>(v));
  }
  put_f64(ncfg, cfg.input_offset);
  put_section(out, "NCFG", ncfg);

  std::vector<std::uint8_t> prms;
  put_layers(prms, ckpt.params.layers);
  put_section(out, "PRMS", prms);

  std::vector<std::uint8_t> opts;
  put_f64(opts, ckpt.opt.learning_rate);
  put_f64(opts, ckpt.opt.momentum);
  put_f64(opts, ckpt.opt.weight_decay);
  put_layers(opts, ckpt.opt.buffers);
  put_section(out, "OPTS", opts);

  std::vector<std::uint8_t> step;
  put_u64(step, ckpt.step);
  put_section(out, "STEP", step);
  write_bytes(path, out);
}

Checkpoint read_checkpoint(const fs::path& path) {
  const auto b = read_bytes(path);
  if (b.size() < 9 || std::memcmp(b.data(), kCheckpointMagic, 9) != 0)
    throw DataError(path.string() + ": missing DVISCKPT1 header");
  Checkpoint ck;
  bool seen_cfg = false, seen_params = false;
  std::size_t pos = 9;
  while (pos < b.size()) {
    if (b.size() - pos < 12) throw DataError(path.string() + ": truncated section header");
    const std::string tag(reinterpret_cast<const char*>(b.data() + pos), 4);
    ByteReader len_reader(b.data() + pos + 4, 8, path.string());
    const std::uint64_t len = len_reader.u64();
    pos += 12;
    if (b.size() - pos < len) throw DataError(path.string() + ": truncated section " + tag);
    ByteReader r(b.data() + pos, len, path.string() + " [" + tag + "]");
    if (tag == "NCFG") {
      ck.params.config.input_channels = static_cast<int>(r.u32());
      ck.params.config.init_seed = r.u64();
      const std::uint32_t n = r.u32();
      for (std::uint32_t k = 0; k < n; ++k) {
        LayerSpec l;
        const auto kind = r.u32();
        if (kind > static_cast<std::uint32_t>(LayerKind::global_avg_pool)) throw DataError("checkpoint: unknown layer kind");
        l.kind = static_cast<LayerKind>(kind);
        l.kernel = static_cast<int>(r.u32());
        l.in_channels = static_cast<int>(r.u32());
        l.out_channels = static_cast<int>(r.u32());
        l.stride = static_cast<int>(r.u32());
        l.factor = static_cast<int>(r.u32());
        ck.params.config.layers.push_back(l);
      }
      ck.params.config.input_offset = r.f64();
      seen_cfg = true;
    } else if (tag == "PRMS") {
      ck.params.layers = get_layers(r);
      seen_params = true;
    } else if (tag == "OPTS") {
      ck.opt.learning_rate = r.f64();
      ck.opt.momentum = r.f64();
      ck.opt.weight_decay = r.f64();
      ck.opt.buffers = get_layers(r);
    } else if (tag == "STEP") {
      ck.step = r.u64();
    }  // unknown tags are skipped
    pos += len;
  }
  if (!seen_cfg || !seen_params) throw DataError(path.string() + ": checkpoint lacks NCFG or PRMS");
  ck.params.config.validate();
  if (ck.params.layers.size() != ck.params.config.layers.size())
    throw DataError(path.string() + ": parameter layers do not match the config");
  for (std::size_t i = 0; i < ck.params.layers.size(); ++i) {
    const auto& l = ck.params.config.layers[i];
    const auto& p = ck.params.layers[i];
    const std::vector<int> wshape =
        l.kind == LayerKind::conv ? std::vector<int>{l.out_channels, l.in_channels, l.kernel, l.kernel} : std::vector<int>{};
    const std::vector<int> bshape = l.kind == LayerKind::conv ? std::vector<int>{l.out_channels} : std::vector<int>{};
    if (p.weight.shape != wshape || p.bias.shape != bshape)
      throw DataError(path.string() + ": tensor shapes disagree with layer " + std::to_string(i));
  }
  if (ck.opt.buffers.empty()) ck.opt = make_opt_state(ck.params, 0.01, 0.9, 1e-4);
  ck.params.touch();
  return ck;
}

// ---- Misc -------------------------------------------------------------------------

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

void write_text(const fs::path& path, const std::string& text) {
  write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace dvis
