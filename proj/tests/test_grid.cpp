#include <doctest.h>

#include <cmath>

#include "dvis/error.hpp"
#include "dvis/grid.hpp"

using namespace dvis;

namespace {

GroundTruthMap map_from(int h, int w, std::vector<std::uint32_t> ids) {
  GroundTruthMap gt(h, w);
  gt.ids.data = std::move(ids);
  for (auto id : gt.ids.data)
    if (id > 0) gt.classes[id] = 1;
  return gt;
}

}  // namespace

TEST_SUITE("grid") {
  TEST_CASE("resize_nearest of a constant map stays constant") {
    const auto gt = map_from(4, 4, std::vector<std::uint32_t>(16, 3));
    const auto r = resize_nearest(gt, 2);
    CHECK(r.height() == 2);
    CHECK(r.width() == 2);
    for (auto id : r.ids.data) CHECK(id == 3);
  }

  TEST_CASE("resize_nearest with factor 1 is the identity") {
    const auto gt = map_from(3, 2, {0, 1, 2, 2, 5, 0});
    CHECK(resize_nearest(gt, 1) == gt);
  }

  TEST_CASE("resize_nearest samples the top-left pixel of each block") {
    const auto gt = map_from(4, 4, {1, 1, 2, 2, 1, 1, 2, 2, 1, 1, 2, 2, 1, 1, 2, 2});
    const auto r = resize_nearest(gt, 2);
    CHECK(r.ids.data == std::vector<std::uint32_t>{1, 2, 1, 2});

    const auto odd = map_from(4, 4, {7, 0, 0, 0, 0, 0, 0, 0, 0, 0, 9, 0, 0, 0, 0, 0});
    CHECK(resize_nearest(odd, 2).ids.data == std::vector<std::uint32_t>{7, 0, 0, 9});
  }

  TEST_CASE("resize_nearest rejects non-divisible sizes") {
    const auto gt = map_from(3, 4, std::vector<std::uint32_t>(12, 0));
    CHECK_THROWS_AS(resize_nearest(gt, 2), DimensionError);
  }

  TEST_CASE("foreground_mask") {
    CHECK(count_set(foreground_mask(map_from(2, 2, {0, 0, 0, 0}))) == 0);
    CHECK(count_set(foreground_mask(map_from(2, 2, {1, 4, 2, 3}))) == 4);
    CHECK(foreground_mask(map_from(2, 2, {0, 1, 2, 0})).data == std::vector<std::uint8_t>{0, 1, 1, 0});
  }

  TEST_CASE("foreground_mask ignores the id permutation") {
    const auto gt = map_from(2, 3, {0, 1, 2, 3, 0, 1});
    const auto p = relabel(gt, {{1, 3}, {2, 1}, {3, 2}});
    CHECK(p.ids.data == std::vector<std::uint32_t>{0, 3, 1, 2, 0, 3});
    CHECK(foreground_mask(p) == foreground_mask(gt));
  }

  TEST_CASE("GroundTruthMap validation requires a class per id") {
    GroundTruthMap gt(2, 2);
    gt.ids.at(0, 1) = 4;
    CHECK_THROWS_AS(gt.validate(), DataError);
    gt.classes[4] = 2;
    CHECK_NOTHROW(gt.validate());
    CHECK(gt.instance_ids() == std::vector<std::uint32_t>{4});
    CHECK(count_set(gt.instance_mask(4)) == 1);
  }

  TEST_CASE("ImageGrid validation") {
    ImageGrid img(2, 3, 2, 0.5);
    CHECK(img.size() == 12);
    CHECK_NOTHROW(img.validate());
    img.data[3] = std::nan("");
    CHECK_THROWS(img.validate());
    CHECK_THROWS_AS(ImageGrid(0, 3, 1), DimensionError);
  }

  TEST_CASE("connected components use 4-connectivity") {
    BinaryMask m(3, 3);
    m.at(0, 0) = m.at(1, 1) = m.at(2, 2) = 1;
    CHECK(connected_components(m) == 3);
    m.at(0, 1) = 1;
    CHECK(connected_components(m) == 2);
    CHECK(connected_components(BinaryMask(2, 2)) == 0);
  }

  TEST_CASE("upsample_mask repeats each pixel") {
    BinaryMask m(1, 2);
    m.at(0, 1) = 1;
    const auto u = upsample_mask(m, 2);
    CHECK(u.height == 2);
    CHECK(u.data == std::vector<std::uint8_t>{0, 0, 1, 1, 0, 0, 1, 1});
  }
}
