#include <doctest.h>

#include "dvis/discretize.hpp"
#include "dvis/error.hpp"
#include "dvis/metrics.hpp"
#include "oracles.hpp"

using namespace dvis;
using doctest::Approx;

namespace {

RealLabelMap plateaus(int h, int w, const std::vector<std::tuple<int, int, int, int, double>>& boxes) {
  RealLabelMap f(h, w, 0.0);
  for (const auto& [y0, x0, y1, x1, v] : boxes)
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) f.at(y, x) = v;
  return f;
}

}  // namespace

TEST_SUITE("discretize") {
  TEST_CASE("mean shift examples") {
    MeanShiftConfig cfg;
    const std::vector<double> one{1.3};
    auto r = mean_shift_1d(one, 0.4, cfg);
    CHECK(r.modes.size() == 1);
    CHECK(r.assignment == std::vector<int>{0});

    const std::vector<double> two{0.1, 0.12, 1.5, 1.52};
    r = mean_shift_1d(two, 0.4, cfg);
    CHECK(r.modes.size() == 2);
    CHECK(r.assignment == std::vector<int>{0, 0, 1, 1});
    CHECK(r.modes[0] == Approx(0.11));
    CHECK(r.modes[1] == Approx(1.51));

    const std::vector<double> same(10, 2.25);
    r = mean_shift_1d(same, 0.9, cfg);
    CHECK(r.modes == std::vector<double>{2.25});
    for (int a : r.assignment) CHECK(a == 0);
  }

  TEST_CASE("mean shift agrees with the gap oracle") {
    MeanShiftConfig cfg;
    dvis::Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
      const double bw = trial % 3 == 0 ? 0.4 : (trial % 3 == 1 ? 0.9 : rng.uniform(0.05, 2.0));
      const auto values = oracle::well_separated_instance(rng, bw);
      CHECK(mean_shift_1d(values, bw, cfg).assignment == oracle::gap_clusters(values, bw));
    }
  }

  TEST_CASE("mean shift assignment is shift-equivariant") {
    MeanShiftConfig cfg;
    dvis::Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
      const auto values = oracle::well_separated_instance(rng, 0.9);
      std::vector<double> shifted = values;
      for (double& v : shifted) v += 3.0;
      CHECK(mean_shift_1d(values, 0.9, cfg).assignment == mean_shift_1d(shifted, 0.9, cfg).assignment);
    }
  }

  TEST_CASE("mean shift merges close modes") {
    MeanShiftConfig cfg;
    // A dense run wider than the bandwidth still converges to one mode.
    std::vector<double> run;
    for (int i = 0; i <= 20; ++i) run.push_back(1.0 + 0.05 * i);
    CHECK(mean_shift_1d(run, 0.9, cfg).modes.size() == 1);
  }

  TEST_CASE("zero map gives no candidates") {
    CHECK(discretize(RealLabelMap(16, 16, 0.0), {}).empty());
  }

  TEST_CASE("two plateaus give two candidates") {
    const auto f = plateaus(20, 20, {{1, 1, 8, 8, 2.0}, {10, 10, 18, 18, 3.0}});
    const auto c = discretize(f, {});
    REQUIRE(c.size() == 2);
    CHECK(c[0].mean_value == 2.0);
    CHECK(c[1].mean_value == 3.0);
    CHECK(count_set(c[0].mask) == 49);
    CHECK(count_set(c[1].mask) == 64);
    CHECK(c[0].bandwidth == 0.9);
    CHECK(mask_iou(c[0].mask, c[1].mask) == 0.0);
  }

  TEST_CASE("an occluded instance stays one disconnected candidate") {
    const auto f = plateaus(20, 20, {{2, 2, 18, 8, 2.0}, {2, 11, 18, 17, 2.0}});
    const auto c = discretize(f, {});
    REQUIRE(c.size() == 1);
    CHECK(connected_components(c[0].mask) == 2);
    CHECK(count_set(c[0].mask) == 2 * 16 * 6);
  }

  TEST_CASE("the smaller bandwidth adds segments the larger one merged") {
    // Levels 2.0 and 2.6 merge at bandwidth 0.9 but split at 0.4.
    const auto f = plateaus(20, 20, {{0, 0, 10, 10, 2.0}, {10, 10, 20, 20, 2.6}});
    const auto c = discretize(f, {});
    REQUIRE(c.size() == 3);
    CHECK(c[0].bandwidth == 0.9);
    CHECK(count_set(c[0].mask) == 200);
    CHECK(c[1].bandwidth == 0.4);
    CHECK(c[2].bandwidth == 0.4);
  }

  TEST_CASE("small segments are dropped") {
    const auto f = plateaus(20, 20, {{0, 0, 4, 4, 2.0}, {10, 10, 20, 20, 4.0}});
    const auto c = discretize(f, {});
    REQUIRE(c.size() == 1);
    CHECK(c[0].mean_value == 4.0);
  }

  TEST_CASE("candidates of one bandwidth are disjoint and above the threshold") {
    dvis::Rng rng(31);
    RealLabelMap f(24, 24);
    for (double& v : f.data) v = rng.bernoulli(0.3) ? 0.0 : 1.0 + static_cast<double>(rng.below(4)) + rng.uniform(0.0, 0.2);
    MeanShiftConfig cfg;
    cfg.bandwidths = {0.4};
    cfg.min_segment_pixels = 1;
    const auto c = discretize(f, cfg);
    CHECK(c.size() >= 3);
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(c[i].mean_value >= cfg.background_threshold);
      for (std::size_t j = i + 1; j < c.size(); ++j) CHECK(mask_iou(c[i].mask, c[j].mask) == 0.0);
    }
  }

  TEST_CASE("config validation") {
    MeanShiftConfig cfg;
    cfg.bandwidths = {};
    CHECK_THROWS_AS(discretize(RealLabelMap(2, 2), cfg), DomainError);
    cfg.bandwidths = {0.0};
    CHECK_THROWS_AS(discretize(RealLabelMap(2, 2), cfg), DomainError);
  }
}
