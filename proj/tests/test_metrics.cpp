#include <doctest.h>

#include "dvis/metrics.hpp"
#include "dvis/rng.hpp"
#include "oracles.hpp"

using namespace dvis;
using doctest::Approx;

namespace {

BinaryMask rect(int h, int w, int y0, int x0, int y1, int x1) {
  BinaryMask m(h, w, 0);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m.at(y, x) = 1;
  return m;
}

GroundTruthMap two_squares() {
  GroundTruthMap gt(12, 12);
  for (int y = 1; y < 5; ++y)
    for (int x = 1; x < 5; ++x) gt.ids.at(y, x) = 1;
  for (int y = 6; y < 11; ++y)
    for (int x = 6; x < 11; ++x) gt.ids.at(y, x) = 2;
  gt.classes = {{1, 1}, {2, 1}};
  return gt;
}

std::vector<ScoredMask> perfect(const GroundTruthMap& gt) {
  std::vector<ScoredMask> out;
  for (auto id : gt.instance_ids()) out.push_back({gt.instance_mask(id), gt.classes.at(id), 0.9});
  return out;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("mask iou") {
    CHECK(mask_iou(rect(4, 4, 0, 0, 2, 2), rect(4, 4, 0, 1, 2, 3)) == Approx(2.0 / 6.0));
    CHECK(mask_iou(rect(4, 4, 0, 0, 2, 2), rect(4, 4, 0, 0, 2, 2)) == 1.0);
    CHECK(mask_iou(rect(4, 4, 0, 0, 1, 1), rect(4, 4, 3, 3, 4, 4)) == 0.0);
    CHECK(mask_iou(BinaryMask(4, 4), BinaryMask(4, 4)) == 0.0);
  }

  TEST_CASE("ap of a ranked list with one false positive in the middle") {
    const auto gt = two_squares();
    std::vector<ScoredMask> dets{{gt.instance_mask(1), 1, 0.9}, {rect(12, 12, 0, 8, 2, 12), 1, 0.8},
                                 {gt.instance_mask(2), 1, 0.7}};
    CHECK(average_precision({dets}, {gt}, 0.5, 1) == Approx(5.0 / 6.0));
  }

  TEST_CASE("ap edge cases") {
    const auto gt = two_squares();
    CHECK(average_precision({perfect(gt)}, {gt}, 0.5, 1) == 1.0);
    CHECK(average_precision({{}}, {gt}, 0.5, 1) == 0.0);
    CHECK(average_precision({perfect(gt)}, {gt}, 0.5, 2) == 0.0);
    // Duplicate of a matched instance counts as a false positive.
    auto dup = perfect(gt);
    dup.push_back({gt.instance_mask(1), 1, 0.1});
    CHECK(average_precision({dup}, {gt}, 0.5, 1) == 1.0);
    dup.back().score = 0.95;
    CHECK(average_precision({dup}, {gt}, 0.5, 1) == Approx(0.5 * 1.0 + 0.5 * (2.0 / 3.0)));
    // Wrong class never matches.
    auto wrong = perfect(gt);
    for (auto& d : wrong) d.cls = 2;
    CHECK(average_precision({wrong}, {gt}, 0.5, 1) == 0.0);
  }

  TEST_CASE("ap agrees with the cut-point oracle") {
    Rng rng(505);
    double worst = 0.0;
    for (int trial = 0; trial < 300; ++trial) {
      const auto inst = oracle::random_ap_instance(rng);
      for (double t : {0.3, 0.5, 0.7})
        for (int cls : {1, 2})
          worst = std::max(worst, std::abs(average_precision(inst.dets, inst.gts, t, cls) - oracle::cut_point_ap(inst, t, cls)));
    }
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("ap does not increase with the iou threshold") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
      const auto inst = oracle::random_ap_instance(rng);
      for (int cls : {1, 2}) {
        double prev = 2.0;
        for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
          const double ap = average_precision(inst.dets, inst.gts, t, cls);
          CHECK(ap <= prev + 1e-12);
          prev = ap;
        }
      }
    }
  }

  TEST_CASE("boundary and distance transform") {
    const auto b = boundary_pixels(rect(5, 5, 1, 1, 4, 4));
    CHECK(count_set(b) == 8);
    CHECK(b.at(2, 2) == 0);
    CHECK(count_set(boundary_pixels(BinaryMask(3, 3, 1))) == 0);
    BinaryMask one(5, 5, 0);
    one.at(2, 2) = 1;
    const auto d = chebyshev_distance(one);
    CHECK(d.at(0, 0) == 2);
    CHECK(d.at(1, 3) == 1);
    CHECK(d.at(2, 2) == 0);
    CHECK(d.at(4, 2) == 2);
  }

  TEST_CASE("contour f1") {
    const auto gt = two_squares();
    CHECK(contour_f1_image(perfect(gt), gt, 0) == 1.0);
    CHECK(contour_f1_image({}, gt, 5) == 0.0);

    GroundTruthMap shifted(12, 12);
    for (int y = 1; y < 5; ++y)
      for (int x = 2; x < 6; ++x) shifted.ids.at(y, x) = 1;
    shifted.classes = {{1, 1}};
    const std::vector<ScoredMask> pred{{rect(12, 12, 1, 1, 5, 5), 1, 0.5}};
    CHECK(contour_f1_image(pred, shifted, 1) == 1.0);
    CHECK(contour_f1_image(pred, shifted, 0) < 1.0);

    auto wrong = perfect(gt);
    for (auto& d : wrong) d.cls = 3;
    CHECK(contour_f1_image(wrong, gt, 10) == 0.0);
  }

  TEST_CASE("contour f1 does not decrease with tolerance") {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
      const auto inst = oracle::random_ap_instance(rng);
      double prev = -1.0;
      for (int tol : {0, 1, 2, 5, 10}) {
        const double f = contour_f1(inst.dets, inst.gts, tol);
        CHECK(f >= prev - 1e-12);
        prev = f;
      }
    }
  }

  TEST_CASE("evaluate on perfect predictions") {
    const auto gt = two_squares();
    GroundTruthMap gt2(12, 12);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 12; ++x) gt2.ids.at(y, x) = 7;
    gt2.classes = {{7, 3}};
    const auto r = evaluate({perfect(gt), perfect(gt2)}, {gt, gt2}, 3);
    CHECK(r.per_class_ap.size() == 2);
    CHECK(r.per_class_ap.count(2) == 0);
    for (double m : r.map_per_threshold) CHECK(m == 1.0);
    CHECK(r.ap_average == 1.0);
    for (double f : r.contour_f1) CHECK(f == 1.0);
    CHECK_THROWS(evaluate({perfect(gt)}, {gt, gt2}, 3));
  }
}
