#include <doctest.h>

#include <set>
#include <tuple>

#include "rmac/region_grid.hpp"

using namespace rmac;

TEST_CASE("choose_m on square and oblong maps") {
  CHECK(choose_m(10, 10) == 1);
  CHECK(choose_m(14, 10) == 2);
  CHECK(choose_m(10, 14) == 2);
  CHECK(choose_m(20, 10) == 3);
  CHECK(choose_m(30, 22) == 2);
  CHECK(grid_overlap(2, 14, 10) == doctest::Approx(0.6));
  CHECK(grid_overlap(3, 14, 10) == doctest::Approx(0.8));
  CHECK(grid_overlap(2, 20, 10) == doctest::Approx(0.0));
  CHECK(grid_overlap(3, 20, 10) == doctest::Approx(0.5));
}

TEST_CASE("square map with three scales gives 1 + 4 + 9 regions") {
  auto by_scale = region_grid_by_scale(12, 12);
  REQUIRE(by_scale.size() == 3);
  CHECK(by_scale[0].size() == 1);
  CHECK(by_scale[1].size() == 4);
  CHECK(by_scale[2].size() == 9);
  CHECK(by_scale[0][0] == Region{0, 0, 11, 11});
  CHECK(by_scale[1][0].width() == 8);
  CHECK(by_scale[2][0].width() == 6);
  CHECK(region_grid(12, 12).size() == 14);
}

TEST_CASE("oblong map: 2 + 6 + 12 regions touching the borders") {
  auto by_scale = region_grid_by_scale(30, 22);
  REQUIRE(by_scale.size() == 3);
  CHECK(by_scale[0].size() == 2);
  CHECK(by_scale[1].size() == 6);
  CHECK(by_scale[2].size() == 12);
  CHECK(by_scale[0][0] == Region{0, 0, 21, 21});
  CHECK(by_scale[0][1] == Region{8, 0, 29, 21});
  for (const auto& scale : by_scale) {
    int min_x = 99, max_x = -1, min_y = 99, max_y = -1;
    for (const auto& r : scale) {
      min_x = std::min(min_x, r.x0);
      max_x = std::max(max_x, r.x1);
      min_y = std::min(min_y, r.y0);
      max_y = std::max(max_y, r.y1);
    }
    CHECK(min_x == 0);
    CHECK(min_y == 0);
    CHECK(max_x == 29);
    CHECK(max_y == 21);
  }
}

TEST_CASE("all regions are in bounds, square and distinct within a scale") {
  for (int w = 2; w <= 40; ++w) {
    for (int h = 2; h <= 40; h += 3) {
      for (const auto& scale : region_grid_by_scale(w, h, {4})) {
        std::set<std::tuple<int, int, int, int>> seen;
        for (const auto& r : scale) {
          REQUIRE(r.within(w, h));
          REQUIRE(std::abs(r.width() - r.height()) <= 1);
          seen.insert({r.x0, r.y0, r.x1, r.y1});
        }
        if (std::min(w, h) >= 5) REQUIRE(seen.size() == scale.size());
      }
    }
  }
}

TEST_CASE("scale subsets") {
  RegionGridParams only2;
  only2.only_scales = {2};
  auto a = region_grid(20, 15, only2);
  CHECK(a == region_grid_by_scale(20, 15)[1]);
  RegionGridParams one;
  one.num_scales = 1;
  CHECK(region_grid(20, 15, one).size() == 2);
  CHECK(region_grid(20, 15) == region_grid(20, 15));
}

TEST_CASE("tiny maps skip scales that vanish") {
  auto g = region_grid_by_scale(1, 1);
  CHECK(g.size() >= 1);
  for (const auto& scale : g)
    for (const auto& r : scale) CHECK(r == Region{0, 0, 0, 0});
}
