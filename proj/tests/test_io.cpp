#include <doctest.h>

#include <fstream>

#include "dvis/io.hpp"
#include "dvis/rng.hpp"

using namespace dvis;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("dvis_io_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& f) const { return path / f; }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("pfm round trip and layout") {
    TempDir dir("pfm");
    RealLabelMap f(2, 2);
    f.data = {0.0, 1.5, -2.25, 3.0};
    write_pfm(dir / "f.pfm", f);
    CHECK(read_pfm(dir / "f.pfm") == f);
    const auto bytes = slurp(dir / "f.pfm");
    CHECK(bytes.rfind("Pf\n", 0) == 0);
    const auto header_end = bytes.find("-1.0\n");
    REQUIRE(header_end != std::string::npos);
    CHECK(bytes.size() - (header_end + 5) == 16);

    Rng rng(1);
    ImageGrid img(5, 7, 3);
    for (double& v : img.data) v = static_cast<float>(rng.uniform());
    write_pfm_image(dir / "i.pfm", img);
    CHECK(read_pfm_image(dir / "i.pfm") == img);
    CHECK_THROWS_AS(read_pfm(dir / "i.pfm"), DataError);
  }

  TEST_CASE("pfm errors") {
    TempDir dir("pfm_err");
    spit(dir / "bad.pfm", "P6\n2 2\n255\n");
    CHECK_THROWS_AS(read_pfm(dir / "bad.pfm"), DataError);
    spit(dir / "short.pfm", "Pf\n2 2\n-1.0\nabc");
    CHECK_THROWS_AS(read_pfm(dir / "short.pfm"), DataError);
    CHECK_THROWS_AS(read_pfm(dir / "missing.pfm"), DataError);
  }

  TEST_CASE("gt map round trip") {
    TempDir dir("gt");
    GroundTruthMap gt(3, 4);
    gt.ids.at(0, 0) = 300;
    gt.ids.at(2, 3) = 7;
    gt.classes = {{300, 2}, {7, 1}};
    write_gt_map(dir / "g.pgm", dir / "g.json", gt);
    CHECK(read_gt_map(dir / "g.pgm", dir / "g.json") == gt);
    gt.ids.at(1, 1) = 70000;
    gt.classes[70000] = 1;
    CHECK_THROWS_AS(write_gt_map(dir / "h.pgm", dir / "h.json", gt), DataError);
  }

  TEST_CASE("pgm maxval must be 16 bit") {
    TempDir dir("pgm");
    spit(dir / "g.pgm", std::string("P5\n2 1\n255\n") + std::string(2, '\0'));
    spit(dir / "g.json", "{}");
    CHECK_THROWS_AS(read_gt_map(dir / "g.pgm", dir / "g.json"), DataError);
    spit(dir / "g.pgm", std::string("P5\n2 1\n65535\n") + std::string(4, '\0'));
    CHECK(read_gt_map(dir / "g.pgm", dir / "g.json").instance_ids().empty());
    spit(dir / "g.pgm", std::string("P5\n2 1\n65535\n") + std::string("\0\1\0\0", 4));
    CHECK_THROWS_AS(read_gt_map(dir / "g.pgm", dir / "g.json"), DataError);
  }

  TEST_CASE("ppm round trip") {
    TempDir dir("ppm");
    RgbImage img{2, 3, {}};
    for (int i = 0; i < 18; ++i) img.data.push_back(static_cast<std::uint8_t>(i * 13));
    write_ppm(dir / "a.ppm", img);
    const auto back = read_ppm(dir / "a.ppm");
    CHECK(back.data == img.data);
    CHECK(back.pixel(1, 2) == std::array<std::uint8_t, 3>{195, 208, 221});
  }

  TEST_CASE("label map rendering") {
    RealLabelMap zero(3, 3, 0.0);
    const auto a = render_label_map(zero);
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x) CHECK(a.pixel(y, x) == colormap(0.0));

    RealLabelMap flat(3, 3, 2.5);
    const auto b = render_label_map(flat);
    CHECK(b.pixel(0, 0) == b.pixel(2, 2));

    RealLabelMap steps(1, 4);
    steps.data = {0.0, 1.0, 2.0, 3.0};
    const auto c = render_label_map(steps);
    for (int x = 0; x + 1 < 4; ++x) {
      int dist = 0;
      for (int k = 0; k < 3; ++k) dist += std::abs(int(c.pixel(0, x)[k]) - int(c.pixel(0, x + 1)[k]));
      CHECK(dist >= 30);
    }
  }

  TEST_CASE("rle") {
    BinaryMask m(2, 3, 0);
    m.at(0, 0) = m.at(0, 1) = m.at(1, 2) = 1;
    CHECK(rle_encode(m) == std::vector<std::uint32_t>{0, 2, 3, 1});
    CHECK(rle_decode(rle_encode(m), 2, 3) == m);
    CHECK(rle_encode(BinaryMask(2, 2)) == std::vector<std::uint32_t>{4});
    CHECK_THROWS_AS(rle_decode({2, 1}, 2, 2), DataError);
    CHECK_THROWS_AS(rle_decode({2, 5}, 2, 2), DataError);
    Rng rng(2);
    for (int t = 0; t < 50; ++t) {
      BinaryMask r(5, 6);
      for (auto& v : r.data) v = rng.bernoulli(0.4) ? 1 : 0;
      CHECK(rle_decode(rle_encode(r), 5, 6) == r);
    }
  }

  TEST_CASE("detections json round trip") {
    Detection d;
    d.mask = BinaryMask(3, 3, 0);
    d.mask.at(1, 1) = 1;
    d.cls = 2;
    d.s_cls = 0.75;
    d.s_iou = 0.5;
    d.score = 0.6875;
    const auto j = detections_to_json({d});
    const auto back = detections_from_json(nlohmann::json::parse(j.dump()));
    REQUIRE(back.size() == 1);
    CHECK(back[0].mask == d.mask);
    CHECK(back[0].cls == 2);
    CHECK(back[0].score == d.score);
    CHECK_THROWS_AS(detections_from_json(nlohmann::json::object()), DataError);
    CHECK_THROWS_AS(detections_from_json(nlohmann::json::parse(R"([{"class":1}])")), DataError);
  }

  TEST_CASE("checkpoint round trip") {
    TempDir dir("ckpt");
    auto cfg = NetConfig::segmentation_default(3, 11);
    Checkpoint c{init(cfg), {}, 42};
    c.opt = make_opt_state(c.params, 0.05, 0.8, 1e-3);
    c.opt.buffers[0].weight.data[3] = 0.125;
    write_checkpoint(dir / "m.ckpt", c);
    const auto back = read_checkpoint(dir / "m.ckpt");
    CHECK(back.params.config == cfg);
    CHECK(back.params.layers == c.params.layers);
    CHECK(back.opt.buffers == c.opt.buffers);
    CHECK(back.opt.learning_rate == 0.05);
    CHECK(back.step == 42);

    auto bytes = slurp(dir / "m.ckpt");
    spit(dir / "trunc.ckpt", bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(read_checkpoint(dir / "trunc.ckpt"), DataError);
    spit(dir / "magic.ckpt", "NOTACKPT" + bytes.substr(8));
    CHECK_THROWS_AS(read_checkpoint(dir / "magic.ckpt"), DataError);
  }

  TEST_CASE("json helpers") {
    TempDir dir("json");
    write_json(dir / "a.json", {{"x", 1}});
    CHECK(read_json(dir / "a.json")["x"] == 1);
    spit(dir / "b.json", "{ broken");
    CHECK_THROWS_AS(read_json(dir / "b.json"), DataError);
  }
}
