#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <set>

#include "dvis/error.hpp"
#include "dvis/rng.hpp"
#include "dvis/sampling.hpp"

using namespace dvis;

namespace {

// Offset count of the default sampler, frozen from brute-force enumeration.
constexpr std::size_t kDefaultOffsetCount = 284;

std::set<Offset> brute_force_offsets(int window, int c, int r) {
  const int reach = (window - 1) / 2;
  std::set<Offset> s;
  for (int dy = -reach; dy <= reach; ++dy)
    for (int dx = -reach; dx <= reach; ++dx) {
      if (!(dx > 0 || (dx == 0 && dy > 0))) continue;
      const int cheb = std::max(std::abs(dx), std::abs(dy));
      const bool four = std::abs(dx) + std::abs(dy) == 1;
      const bool center = cheb <= c;
      const bool lattice = dx % r == 0 && dy % r == 0;
      if (four || center || lattice) s.insert({dx, dy});
    }
  return s;
}

GroundTruthMap random_gt(std::uint64_t seed, int h, int w, double fg) {
  Rng rng(seed);
  GroundTruthMap gt(h, w);
  for (auto& id : gt.ids.data) id = rng.bernoulli(fg) ? 1 + static_cast<std::uint32_t>(rng.below(3)) : 0;
  for (std::uint32_t id = 1; id <= 3; ++id) gt.classes[id] = 1;
  return gt;
}

}  // namespace

TEST_SUITE("sampling") {
  TEST_CASE("3x3 window gives the half-plane of the 8-neighborhood") {
    const auto o = stratified_offsets({3, 1, 1});
    const std::vector<Offset> expected{{0, 1}, {1, -1}, {1, 0}, {1, 1}};
    CHECK(o == expected);
  }

  TEST_CASE("offsets never include the origin and stay within the window") {
    for (auto cfg : {SamplerConfig{3, 1, 1}, SamplerConfig{9, 2, 3}, SamplerConfig{33, 4, 4}, SamplerConfig{}}) {
      const int reach = (cfg.window - 1) / 2;
      for (const auto& o : stratified_offsets(cfg)) {
        CHECK_FALSE((o.dx == 0 && o.dy == 0));
        CHECK(std::max(std::abs(o.dx), std::abs(o.dy)) <= reach);
        CHECK((o.dx > 0 || (o.dx == 0 && o.dy > 0)));
      }
    }
  }

  TEST_CASE("default offsets match brute force and the frozen count") {
    const auto o = stratified_offsets(SamplerConfig{});
    const auto brute = brute_force_offsets(129, 8, 8);
    CHECK(o.size() == brute.size());
    CHECK(std::equal(o.begin(), o.end(), brute.begin(), brute.end()));
    CHECK(o.size() == kDefaultOffsetCount);
  }

  TEST_CASE("offsets match brute force for assorted configurations") {
    for (int window : {5, 9, 17, 33})
      for (int c = 1; 2 * c < window; c += 2)
        for (int r : {1, 2, 3, 4}) {
          const auto o = stratified_offsets({window, c, r});
          const auto brute = brute_force_offsets(window, c, r);
          CHECK(std::equal(o.begin(), o.end(), brute.begin(), brute.end()));
        }
  }

  TEST_CASE("config validation") {
    CHECK_THROWS_AS(stratified_offsets({4, 1, 1}), DomainError);
    CHECK_THROWS_AS(stratified_offsets({1, 1, 1}), DomainError);
    CHECK_THROWS_AS(stratified_offsets({9, 0, 1}), DomainError);
    CHECK_THROWS_AS(stratified_offsets({9, 5, 1}), DomainError);
    CHECK_THROWS_AS(stratified_offsets({9, 2, 0}), DomainError);
  }

  TEST_CASE("all-background map gives no stratified pairs") {
    GroundTruthMap gt(8, 8);
    CHECK(sample_pairs_stratified(gt, {5, 1, 1}).empty());
  }

  TEST_CASE("single interior foreground pixel with a 3x3 window") {
    GroundTruthMap gt(5, 5);
    gt.ids.at(2, 2) = 1;
    gt.classes[1] = 1;
    const auto pairs = sample_pairs_stratified(gt, {3, 1, 1});
    CHECK(pairs.size() == 8);
    std::set<std::uint32_t> partners;
    for (const auto& p : pairs.pairs) {
      const std::uint32_t center = 12;
      CHECK((p.first == center || p.second == center));
      partners.insert(p.first == center ? p.second : p.first);
    }
    CHECK(partners == std::set<std::uint32_t>{6, 7, 8, 11, 13, 16, 17, 18});
  }

  TEST_CASE("stratified pairs follow the foreground rule and ordering") {
    const auto gt = random_gt(4, 20, 17, 0.3);
    const SamplerConfig cfg{9, 2, 3};
    const auto a = sample_pairs_stratified(gt, cfg);
    CHECK(a == sample_pairs_stratified(gt, cfg));
    CHECK(std::is_sorted(a.pairs.begin(), a.pairs.end(),
                         [](const PixelPair& x, const PixelPair& y) { return x.first < y.first; }));
    std::size_t expected = 0;
    const auto offsets = stratified_offsets(cfg);
    for (int y = 0; y < 20; ++y)
      for (int x = 0; x < 17; ++x)
        for (const auto& o : offsets) {
          if (!gt.ids.contains(y + o.dy, x + o.dx)) continue;
          if (gt.ids.at(y, x) > 0 || gt.ids.at(y + o.dy, x + o.dx) > 0) ++expected;
        }
    CHECK(a.size() == expected);
    for (const auto& p : a.pairs) {
      CHECK(p.first != p.second);
      CHECK((gt.ids.data[p.first] > 0 || gt.ids.data[p.second] > 0));
      const int dy = static_cast<int>(p.second / 17) - static_cast<int>(p.first / 17);
      const int dx = static_cast<int>(p.second % 17) - static_cast<int>(p.first % 17);
      CHECK(std::max(std::abs(dx), std::abs(dy)) <= 4);
    }
  }

  TEST_CASE("random pairs are seeded and valid") {
    const auto gt = random_gt(9, 32, 32, 0.2);
    SamplerConfig cfg;
    cfg.mode = SamplingMode::random;
    cfg.random_pair_count = 500;
    cfg.seed = 1;
    const auto a = sample_pairs(gt, cfg);
    CHECK(a.size() == 500);
    CHECK(a == sample_pairs(gt, cfg));
    cfg.seed = 2;
    CHECK_FALSE(a == sample_pairs(gt, cfg));
    for (const auto& p : a.pairs) {
      CHECK(p.first != p.second);
      CHECK((gt.ids.data[p.first] > 0 || gt.ids.data[p.second] > 0));
    }
  }

  TEST_CASE("random pair with a single foreground pixel contains it") {
    GroundTruthMap gt(6, 6);
    gt.ids.at(3, 1) = 2;
    gt.classes[2] = 1;
    SamplerConfig cfg;
    cfg.random_pair_count = 1;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      cfg.seed = seed;
      const auto pairs = sample_pairs_random(gt, cfg);
      REQUIRE(pairs.size() == 1);
      const std::uint32_t idx = 3 * 6 + 1;
      CHECK((pairs.pairs[0].first == idx || pairs.pairs[0].second == idx));
    }
  }

  TEST_CASE("random sampling without foreground is a data error") {
    SamplerConfig cfg;
    cfg.mode = SamplingMode::random;
    CHECK_THROWS_AS(sample_pairs(GroundTruthMap(4, 4), cfg), DataError);
  }
}
