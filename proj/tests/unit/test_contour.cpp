#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "tumor/contour.hpp"
#include "tumor/errors.hpp"

using namespace tumor;

namespace {

Field disks(const Grid& g, std::vector<std::pair<Point, double>> ds) {
  Field f(g);
  for (int v = 0; v < static_cast<int>(g.size()); ++v)
    for (auto& [c, r] : ds)
      if (distance(g.center(v), c) < r) f[v] = 1.0;
  return f;
}

Contour circle(double r, int n, bool ccw = true) {
  Contour c;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n * (ccw ? 1.0 : -1.0);
    c.points.push_back({r * std::cos(t), r * std::sin(t)});
  }
  return c;
}

}  // namespace

TEST_CASE("disk indicator gives one CCW contour with the right area") {
  const Grid g = Grid::standard();
  const auto cs = extract_contours(disks(g, {{{0, 0}, 0.5}}), 0.5);
  REQUIRE(cs.size() == 1);
  const double area = cs[0].signed_area();
  CHECK(area > 0.0);
  CHECK(!cs[0].hole);
  CHECK(std::abs(area - std::numbers::pi * 0.25) < 2 * g.h() * cs[0].perimeter());
}

TEST_CASE("constant field has no contour") {
  const Grid g = Grid::centered(10, 1.0);
  CHECK(extract_contours(Field(g, 0.3), 0.5).empty());
  CHECK(extract_contours(Field(g, 0.7), 0.5).size() == 1);  // closed by the padding
}

TEST_CASE("two disjoint disks come back largest first") {
  const Grid g = Grid::standard();
  const auto cs = extract_contours(disks(g, {{{-0.5, 0}, 0.15}, {{0.4, 0.1}, 0.3}}), 0.5);
  REQUIRE(cs.size() == 2);
  CHECK(cs[0].size() > cs[1].size());
  CHECK(cs[0].signed_area() > cs[1].signed_area());
  CHECK(cs[1].signed_area() > 0.0);
}

TEST_CASE("annulus yields an outer contour and a flagged hole, both CCW") {
  const Grid g = Grid::standard();
  Field f = disks(g, {{{0, 0}, 0.6}});
  for (int v = 0; v < static_cast<int>(g.size()); ++v)
    if (distance(g.center(v), {0, 0}) < 0.3) f[v] = 0.0;
  const auto cs = extract_contours(f, 0.5);
  REQUIRE(cs.size() == 2);
  CHECK(!cs[0].hole);
  CHECK(cs[1].hole);
  CHECK(cs[1].signed_area() > 0.0);
}

TEST_CASE("saddle cells keep diagonal voxels apart or joined by the center value") {
  const Grid g(4, 4, 1.0, 0.0, 0.0);
  Field f(g);
  f.at(1, 1) = 1.0;
  f.at(2, 2) = 1.0;
  CHECK(extract_contours(f, 0.6).size() == 2);
  CHECK(extract_contours(f, 0.4).size() == 1);
}

TEST_CASE("filter keeps contours near the largest size") {
  auto make = [](std::size_t n) {
    Contour c;
    c.points.resize(n);
    return c;
  };
  auto kept = filter_contours({make(100), make(96)}, 0.95);
  CHECK(kept.size() == 2);
  kept = filter_contours({make(100), make(40)}, 0.95);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].size() == 100);
  CHECK(filter_contours({make(7)}, 0.95).size() == 1);
  CHECK_THROWS_AS(filter_contours({}, 1.5), ConfigError);
}

TEST_CASE("circle curvature is 1/r with orientation sign") {
  const auto kc = contour_curvature(circle(2.0, 64));
  for (double c : kc) CHECK(std::abs(c - 0.5) / 0.5 < 0.01);
  const auto kw = contour_curvature(circle(2.0, 64, false));
  for (double c : kw) CHECK(std::abs(c + 0.5) / 0.5 < 0.01);
}

TEST_CASE("ellipse curvature at the end of the major axis") {
  Contour e;
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    e.points.push_back({2.0 * std::cos(t), std::sin(t)});
  }
  const auto k = contour_curvature(e);
  const double ref = oracle::ellipse_curvature(2.0, 1.0, 0.0);
  CHECK(ref == doctest::Approx(2.0));
  CHECK(std::abs(k[0] - ref) / ref < 0.02);
}

TEST_CASE("circle curvature converges with at least first order") {
  double prev = 0.0;
  for (int n : {16, 32, 64, 128}) {
    const auto k = contour_curvature(circle(1.0, n));
    double err = 0.0;
    for (double c : k) err = std::max(err, std::abs(c - 1.0));
    if (prev > 0.0 && err > 1e-12) CHECK(std::log2(prev / err) >= 1.0);
    prev = err;
  }
}

TEST_CASE("duplicates collapse, degenerate contours throw") {
  Contour c = circle(1.0, 32);
  c.points.insert(c.points.begin() + 5, c.points[5]);
  c.points.push_back(c.points[0]);
  const auto k = contour_curvature(c);
  CHECK(k.size() == c.size());
  for (double v : k) CHECK(v == doctest::Approx(1.0).epsilon(0.01));
  Contour tiny;
  tiny.points = {{0, 0}, {1, 0}, {1, 0}, {0, 1}};
  CHECK_THROWS_AS(contour_curvature(tiny), GeometryError);
}

TEST_CASE("contour csv has arc length") {
  std::ostringstream out;
  write_contour_csv(out, with_curvature(circle(1.0, 8)));
  CHECK(out.str().rfind("s,x,y,C\n0,1,0,", 0) == 0);
}
