#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "dvis/dataset.hpp"
#include "dvis/io.hpp"

using namespace dvis;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "dvis_cli_test";

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DVIS_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string dir(const std::string& name) { return (kRoot / name).string(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const std::string kSmall =
    " --set scene.height=32 --set scene.width=32 --set scene.radius_min=4 --set scene.radius_max=7"
    " --set scene.max_instances=4 --set dataset.train_count=3 --set dataset.test_count=2";

struct Fixture {
  Fixture() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
  }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 1") {
    Fixture f;
    CHECK(cli("") == 1);
    CHECK(cli("synth") == 1);
    CHECK(cli("frobnicate --out " + dir("x")) == 1);
    CHECK(cli("synth --out " + dir("x") + " --set scene.no_such_key=1") == 1);
    CHECK(cli("infer --out " + dir("x")) == 1);
    CHECK(cli("synth --out " + dir("x") + " --split validation") == 1);
  }

  TEST_CASE("data errors exit 2") {
    Fixture f;
    std::ofstream(kRoot / "bad.json") << "{ not json";
    CHECK(cli("synth --config " + dir("bad.json") + " --out " + dir("x")) == 2);
    std::ofstream(kRoot / "bad.pfm") << "P5\n1 1\n255\n";
    CHECK(cli("discretize --set paths.label_map=" + dir("bad.pfm") + " --out " + dir("x")) == 2);
    CHECK(cli("eval --set paths.dataset=" + dir("missing") + " --set paths.model=" + dir("m") + " --out " + dir("x")) == 2);
  }

  TEST_CASE("gradcheck passes and writes a manifest") {
    Fixture f;
    CHECK(cli("gradcheck --out " + dir("gc")) == 0);
    const auto report = read_json(kRoot / "gc" / "gradcheck.json");
    CHECK(report.size() == 7);
    const auto manifest = read_json(kRoot / "gc" / "manifest.json");
    CHECK(manifest["command"] == "gradcheck");
    CHECK(manifest["exit_code"] == 0);
    CHECK(manifest.contains("config"));
    CHECK(manifest.contains("created_at"));
  }

  TEST_CASE("eval of ground truth as detections gives perfect scores") {
    Fixture f;
    REQUIRE(cli("synth --split test --out " + dir("data") + kSmall) == 0);
    const DirectorySource data(dir("data"));
    REQUIRE(data.size() == 2);
    fs::create_directories(kRoot / "dets");
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto gt = data.scene(i).gt;
      std::vector<Detection> dets;
      for (auto id : gt.instance_ids()) {
        Detection d;
        d.mask = gt.instance_mask(id);
        d.cls = gt.classes.at(id);
        d.score = d.s_cls = d.s_iou = 1.0;
        dets.push_back(d);
      }
      char name[48];
      std::snprintf(name, sizeof name, "scene_%05zu_detections.json", i);
      write_json(kRoot / "dets" / name, detections_to_json(dets));
    }
    REQUIRE(cli("eval --set paths.dataset=" + dir("data") + " --set paths.detections=" + dir("dets") + " --out " +
                dir("eval")) == 0);
    const auto report = read_json(kRoot / "eval" / "report.json");
    for (const auto& m : report["map"]) CHECK(m.get<double>() == 1.0);
    for (const auto& c : report["contour_f1"]) CHECK(c.get<double>() == 1.0);
  }

  TEST_CASE("train, infer, discretize and render end to end, twice") {
    Fixture f;
    const std::string train_args = " --set train.steps=3 --set pipeline.verifier.steps=3" + kSmall;
    REQUIRE(cli("synth --split test --out " + dir("data") + kSmall) == 0);
    for (const std::string run : {"a", "b"}) {
      REQUIRE(cli("train --out " + dir(run + "/model") + train_args) == 0);
      REQUIRE(cli("infer --set paths.model=" + dir(run + "/model") + " --set paths.image=" + dir("data/scene_00000_image.pfm") +
                  " --out " + dir(run + "/infer")) == 0);
      REQUIRE(cli("discretize --set paths.label_map=" + dir(run + "/infer/f.pfm") + " --out " + dir(run + "/disc")) == 0);
      REQUIRE(cli("render --set paths.detections=" + dir(run + "/infer/detections.json") + " --set paths.image=" +
                  dir("data/scene_00000_image.pfm") + " --out " + dir(run + "/render")) == 0);
      REQUIRE(cli("eval --set paths.dataset=" + dir("data") + " --set paths.model=" + dir(run + "/model") + " --out " +
                  dir(run + "/eval")) == 0);
    }
    const auto f_map = read_pfm(kRoot / "a/infer/f.pfm");
    CHECK(f_map.height == 16);
    CHECK(read_json(kRoot / "a/infer/detections.json").is_array());
    CHECK(read_json(kRoot / "a/disc/candidates.json") == read_json(kRoot / "a/infer/candidates.json"));
    for (const char* file : {"model/seg.ckpt", "model/verifier.ckpt", "model/trace.csv", "infer/f.pfm",
                             "infer/detections.json", "infer/detections.ppm", "disc/candidates.json",
                             "render/render.ppm", "eval/report.json"})
      CHECK_MESSAGE(slurp(kRoot / "a" / file) == slurp(kRoot / "b" / file), file);
    const auto trace = slurp(kRoot / "a/model/trace.csv");
    CHECK(trace.rfind("step,binary,pi,ms,quant,total\n", 0) == 0);
  }

  TEST_CASE("a numeric failure exits 3") {
    Fixture f;
    REQUIRE(cli("synth --out " + dir("huge") + kSmall) == 0);
    for (const char* name : {"scene_00000_image.pfm", "scene_00001_image.pfm", "scene_00002_image.pfm"}) {
      auto img = read_pfm_image(kRoot / "huge" / name);
      for (double& v : img.data) v = 3e38;
      write_pfm_image(kRoot / "huge" / name, img);
    }
    CHECK(cli("train --out " + dir("nan") + " --set paths.dataset=" + dir("huge") +
              " --set train.steps=3 --set train.optimizer.learning_rate=1e300" + kSmall) == 3);
  }
}
