#include "doctest.h"

#include <sstream>

#include "tumor/errors.hpp"
#include "tumor/grid.hpp"

using namespace tumor;

TEST_CASE("voxel centers and indexing") {
  const Grid g(4, 3, 0.5, -1.0, -0.75);
  CHECK(g.size() == 12);
  CHECK(g.index(2, 1) == 6);
  CHECK(g.col(6) == 2);
  CHECK(g.row(6) == 1);
  CHECK(g.center(0, 0).x == doctest::Approx(-0.75));
  CHECK(g.center(0, 0).y == doctest::Approx(-0.5));
  CHECK(g.locate(g.center(3, 2)) == g.index(3, 2));
  CHECK(g.locate({5.0, 0.0}) == -1);
}

TEST_CASE("neighbors are 4-connected with -1 at the edge") {
  const Grid g(3, 3, 1.0, 0.0, 0.0);
  const auto corner = g.neighbors(0);
  CHECK(corner[0] == 1);
  CHECK(corner[1] == -1);
  CHECK(corner[2] == 3);
  CHECK(corner[3] == -1);
  const auto mid = g.neighbors(4);
  CHECK(mid == std::array<int, 4>{5, 3, 7, 1});
}

TEST_CASE("standard lattice covers [-1.1, 1.1]^2 at h = 0.02") {
  const Grid g = Grid::standard();
  CHECK(g.nx() == 110);
  CHECK(g.ny() == 110);
  CHECK(g.h() == doctest::Approx(0.02));
  CHECK(g.x0() == doctest::Approx(-1.1));
  CHECK(g.center(54, 54).x == doctest::Approx(-0.01));
}

TEST_CASE("invalid grids are rejected") {
  CHECK_THROWS_AS(Grid(2, 5, 1.0, 0, 0), ConfigError);
  CHECK_THROWS_AS(Grid(5, 5, 0.0, 0, 0), ConfigError);
  CHECK_THROWS_AS(Field(Grid(3, 3, 1, 0, 0), std::vector<double>(4)), ConfigError);
}

TEST_CASE("field csv dump") {
  const Grid g(3, 3, 1.0, 0.0, 0.0);
  Field f(g, 2.0);
  f.at(1, 0) = 3.5;
  std::ostringstream out;
  write_field_csv(out, f);
  const std::string s = out.str();
  CHECK(s.rfind("x,y,value\n0.5,0.5,2\n1.5,0.5,3.5\n", 0) == 0);
  CHECK(f.sum() == doctest::Approx(19.5));
  CHECK(f.all_finite());
}
