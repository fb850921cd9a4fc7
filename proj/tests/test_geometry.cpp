#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "mra/geometry.hpp"

using namespace mra;

TEST_CASE("domain validation") {
  CHECK_THROWS_AS(Domain::interval(1.0, 1.0), GeometryError);
  Domain d;
  d.dim = 3;
  CHECK_THROWS_AS(d.validate(), GeometryError);
  CHECK(Domain::unit(2).contains({1.0, 0.0}));
  CHECK_FALSE(Domain::unit(1).contains({1.0000001, 0.0}));
}

TEST_CASE("1-D binary partition") {
  const auto t = build_partition_tree(Domain::unit(1), 2, 3);
  CHECK(t.region_count(1) == 2);
  CHECK(t.region_count(3) == 8);
  const auto r0 = t.region_bounds(1, 0);
  const auto r1 = t.region_bounds(1, 1);
  CHECK(r0.lower[0] == 0.0);
  CHECK(r0.upper[0] == 0.5);
  CHECK(r1.lower[0] == 0.5);
  CHECK(r1.upper[0] == 1.0);
  for (long i = 0; i < 8; ++i) {
    const auto b = t.region_bounds(3, i);
    CHECK(b.upper[0] - b.lower[0] == doctest::Approx(0.125).epsilon(1e-15));
  }
}

TEST_CASE("region paths follow the half-open convention") {
  const auto t = build_partition_tree(Domain::unit(1), 2, 3);
  CHECK(t.region_path({0.5, 0.0}, 1) == std::vector<int>{2});
  CHECK(t.region_path({0.49, 0.0}, 3) == std::vector<int>{1, 2, 2});
  CHECK(t.region_path({1.0, 0.0}, 1) == std::vector<int>{2});
  CHECK(t.region_path({0.0, 0.0}, 3) == std::vector<int>{1, 1, 1});
  CHECK(t.region_path({0.3, 0.0}, 0).empty());
  CHECK_THROWS_AS(t.region_path({1.5, 0.0}, 1), GeometryError);
}

TEST_CASE("2-D quadrant partition") {
  const auto t = build_partition_tree(Domain::unit(2), 4, 1);
  CHECK(t.region_count(1) == 4);
  for (long i = 0; i < 4; ++i) {
    const auto b = t.region_bounds(1, i);
    CHECK(b.extent(0) == 0.5);
    CHECK(b.extent(1) == 0.5);
  }
  CHECK(t.region_index({0.25, 0.25}, 1) != t.region_index({0.75, 0.25}, 1));
  CHECK(t.region_index({0.5, 0.5}, 1) == t.region_index({0.9, 0.9}, 1));
}

TEST_CASE("2-D binary partition alternates axes") {
  const auto t = build_partition_tree(Domain::unit(2), 2, 4);
  CHECK(t.grid(1) == std::array<long, 2>{2, 1});
  CHECK(t.grid(2) == std::array<long, 2>{2, 2});
  CHECK(t.grid(3) == std::array<long, 2>{4, 2});
  CHECK(t.region_count(4) == 16);
}

TEST_CASE("unsupported partitions") {
  CHECK_THROWS_AS(build_partition_tree(Domain::unit(1), 3, 2), GeometryError);
  CHECK_THROWS_AS(build_partition_tree(Domain::unit(2), 8, 2), GeometryError);
}

TEST_CASE("paths are prefixes across levels") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int J : {2, 4}) {
    for (int dim : {1, 2}) {
      const auto t = build_partition_tree(Domain::unit(dim), J, 5);
      for (int k = 0; k < 200; ++k) {
        const Point s{u(rng), dim == 2 ? u(rng) : 0.0};
        for (int m = 0; m < 5; ++m) {
          const auto a = t.region_path(s, m);
          const auto b = t.region_path(s, m + 1);
          REQUIRE(b.size() == a.size() + 1);
          CHECK(std::equal(a.begin(), a.end(), b.begin()));
        }
        // The region really contains the point.
        const auto box = t.region_bounds(5, t.region_index(s, 5));
        CHECK(box.contains(s));
      }
    }
  }
}

TEST_CASE("boundary knots") {
  const auto h = build_regular_knots(Domain::unit(1), 1, 2, 2, KnotLayout::boundary);
  REQUIRE(h.depth() == 2);
  CHECK(h.levels[0] == std::vector<Point>{{0.5, 0.0}});
  CHECK(h.levels[1] == std::vector<Point>{{0.25, 0.0}, {0.75, 0.0}});
  CHECK(h.count(2) == 4);
  CHECK_THROWS_AS(build_regular_knots(Domain::unit(2), 1, 2, 2, KnotLayout::boundary),
                  GeometryError);
  CHECK_THROWS_AS(build_regular_knots(Domain::unit(1), 2, 2, 2, KnotLayout::boundary),
                  GeometryError);
}

TEST_CASE("lattice base case") {
  const auto h = build_regular_knots(Domain::unit(1), 3, 2, 0, KnotLayout::lattice);
  REQUIRE(h.depth() == 0);
  CHECK(h.count(0) == 3);
  CHECK(h.duplicates().empty());
}

TEST_CASE("lattice knots are pairwise distinct and balanced") {
  for (int dim : {1, 2}) {
    for (int J : {2, 4}) {
      for (int r0 : {1, 2, 4}) {
        const int M = 3;
        const auto h = build_regular_knots(Domain::unit(dim), r0, J, M, KnotLayout::lattice);
        h.validate();
        std::vector<Point> all;
        long expected = r0;
        for (int m = 0; m <= M; ++m, expected *= J) {
          CHECK(static_cast<long>(h.count(m)) == expected);
          all.insert(all.end(), h.levels[m].begin(), h.levels[m].end());
        }
        double closest = 1.0;
        for (std::size_t a = 0; a < all.size(); ++a) {
          for (std::size_t b = a + 1; b < all.size(); ++b) {
            closest = std::min(closest, distance(all[a], all[b]));
          }
        }
        CHECK(closest > 1e-6);
        CHECK(h.duplicates().empty());

        const auto t = build_partition_tree(Domain::unit(dim), J, M);
        for (int m = 0; m <= M; ++m) {
          std::vector<long> per(static_cast<std::size_t>(t.region_count(m)), 0);
          for (const auto& q : h.levels[m]) ++per[t.region_index(q, m)];
          for (long c : per) {
            CHECK(c >= r0 - J);
            CHECK(c <= r0 + J);
          }
        }
      }
    }
  }
}

TEST_CASE("lattice r0=1 J=2 M=3 on the unit interval") {
  const auto h = build_regular_knots(Domain::unit(1), 1, 2, 3, KnotLayout::lattice);
  CHECK(h.total() == 15);
  CHECK(h.duplicates().empty());
}

TEST_CASE("duplicate detection") {
  KnotHierarchy h;
  h.domain = Domain::unit(1);
  h.levels = {{{0.5, 0.0}}, {{0.25, 0.0}, {0.5, 0.0}}};
  const auto d = h.duplicates();
  REQUIRE(d.size() == 1);
  CHECK(d[0].first == 1);
  CHECK(d[0].second == 1);
}

TEST_CASE("knot construction errors") {
  CHECK_THROWS_AS(build_regular_knots(Domain::unit(1), 0, 2, 1, KnotLayout::lattice), GeometryError);
  CHECK_THROWS_AS(build_regular_knots(Domain::unit(1), 1, 1, 1, KnotLayout::lattice), GeometryError);
  CHECK_THROWS_AS(build_regular_knots(Domain::interval(0.0, 1e-9), 4, 2, 12, KnotLayout::lattice),
                  GeometryError);
  CHECK(parse_knot_layout("boundary") == KnotLayout::boundary);
  CHECK_THROWS_AS(parse_knot_layout("random"), GeometryError);
}
