#include "doctest.h"

#include <cmath>
#include <map>
#include <random>

#include "oracles.hpp"
#include "tumor/errors.hpp"
#include "tumor/laplace.hpp"

using namespace tumor;

namespace {

std::vector<DirichletValue> pin_border(const Grid& g, double value) {
  std::vector<DirichletValue> d;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      if (i == 0 || j == 0 || i == g.nx() - 1 || j == g.ny() - 1) d.push_back({g.index(i, j), value});
  return d;
}

}  // namespace

TEST_CASE("zero source with zero boundary gives zero") {
  const Grid g = Grid::centered(16, 1.0);
  const Field phi = solve_laplace(g, Field(g), pin_border(g, 0.0), {});
  for (double v : phi.values()) CHECK(v == 0.0);
}

TEST_CASE("constants are harmonic") {
  const Grid g = Grid::centered(16, 1.0);
  const Field phi = solve_laplace(g, Field(g), pin_border(g, 0.93), {});
  for (double v : phi.values()) CHECK(v == doctest::Approx(0.93).epsilon(1e-12));
}

TEST_CASE("point source on 64x64 matches a dense LU solve") {
  const Grid g = Grid::centered(64, 1.0);
  Field src(g);
  src.at(32, 32) = 1.0 / (g.h() * g.h());
  const auto pins = pin_border(g, 0.0);
  SolveReport rep;
  const Field phi = solve_laplace(g, src, pins, {}, {}, &rep);
  std::map<int, double> pm;
  for (auto& d : pins) pm[d.voxel] = d.value;
  const auto ref = oracle::dense_laplace(g, std::vector<double>(src.values().begin(), src.values().end()), pm);
  double err = 0.0;
  for (std::size_t v = 0; v < ref.size(); ++v) err = std::max(err, std::abs(ref[v] - phi[v]));
  CHECK(err < 1e-8);
  CHECK(rep.residual <= 1e-10);
}

TEST_CASE("masked domain with Neumann faces matches the dense oracle") {
  const Grid g = Grid::centered(20, 1.0);
  std::vector<std::uint8_t> dom(g.size(), 0);
  std::map<int, double> pm;
  std::vector<DirichletValue> pins;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> f(g.size(), 0.0);
  for (int v = 0; v < static_cast<int>(g.size()); ++v) {
    const Point c = g.center(v);
    if (std::hypot(c.x, c.y) < 0.8) {
      dom[v] = 1;
      f[v] = U(rng);
      if (std::hypot(c.x, c.y) > 0.7) {
        pm[v] = U(rng);
        pins.push_back({v, pm[v]});
      }
    }
  }
  SolveOptions opt;
  opt.domain = dom;
  opt.fill_value = -7.0;
  const Field phi = solve_laplace(g, Field(g, f), pins, {}, opt);
  const auto ref = oracle::dense_laplace(g, f, pm, dom);
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (dom[v])
      CHECK(phi[v] == doctest::Approx(ref[v]).epsilon(1e-8).scale(1.0));
    else
      CHECK(phi[v] == -7.0);
  }

  LaplaceOperator op{g, dom, pins, {}, {}};
  const LaplaceFactorization fac(op);
  const Field psi = fac.solve(Field(g, f), {}, -7.0);
  for (std::size_t v = 0; v < g.size(); ++v) CHECK(psi[v] == doctest::Approx(phi[v]).epsilon(1e-8).scale(1.0));
}

TEST_CASE("factorization accepts new pinned values") {
  const Grid g = Grid::centered(12, 1.0);
  const auto pins = pin_border(g, 0.0);
  const LaplaceFactorization fac(LaplaceOperator{g, {}, pins, {}, {}});
  const std::vector<double> ones(pins.size(), 2.5);
  const Field phi = fac.solve(Field(g), ones);
  for (double v : phi.values()) CHECK(v == doctest::Approx(2.5));
}

TEST_CASE("Neumann faces cut coupling") {
  // A 3x3 lattice split by blocking the faces between column 0 and 1: the
  // left column has its own pin and stays constant.
  const Grid g(3, 3, 1.0, 0.0, 0.0);
  std::vector<Face> cut;
  for (int j = 0; j < 3; ++j) cut.push_back({g.index(0, j), 0});
  std::vector<DirichletValue> pins{{g.index(0, 0), 1.0}, {g.index(2, 2), 5.0}};
  const Field phi = solve_laplace(g, Field(g), pins, cut);
  for (int j = 0; j < 3; ++j) CHECK(phi.at(0, j) == doctest::Approx(1.0));
  CHECK(phi.at(1, 1) == doctest::Approx(5.0));
}

TEST_CASE("maximum principle") {
  const Grid g = Grid::centered(24, 1.0);
  std::vector<DirichletValue> pins;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-2.0, 3.0);
  for (auto d : pin_border(g, 0.0)) pins.push_back({d.voxel, U(rng)});
  double lo = 1e9, hi = -1e9;
  for (auto& d : pins) lo = std::min(lo, d.value), hi = std::max(hi, d.value);
  const Field phi = solve_laplace(g, Field(g), pins, {});
  CHECK(phi.min() >= lo - 1e-9);
  CHECK(phi.max() <= hi + 1e-9);
}

TEST_CASE("singular systems and stalls are reported") {
  const Grid g = Grid::centered(8, 1.0);
  CHECK_THROWS_AS(solve_laplace(g, Field(g, 1.0), {}, {}), ConfigError);
  SolveOptions opt;
  opt.shift.assign(g.size(), 1.0);
  CHECK_NOTHROW(solve_laplace(g, Field(g, 1.0), {}, {}, opt));
  SolveOptions capped;
  capped.max_iter = 1;
  Field src(g);
  src.at(3, 4) = 1.0;
  try {
    solve_laplace(g, src, pin_border(g, 0.0), {}, capped);
    FAIL("expected non-convergence");
  } catch (const NumericalError& e) {
    CHECK(e.residual() > 0.0);
  }
}
