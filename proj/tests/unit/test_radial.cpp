#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "tumor/errors.hpp"
#include "tumor/radial.hpp"

using namespace tumor;
using namespace tumor::radial;

namespace {
const State ref_state{0.1, 0.2, 0.3};
const ReducedParams ref_params{5.0, 0.234527, 0.250663};
Params table2() { return Params{1.15, 0.94, 0.93, 1.35}; }
}  // namespace

TEST_CASE("oxygen profile boundary values and oracle") {
  CHECK(oxygen_profile(ref_state, 1.3, 1.0) == doctest::Approx(1.0));
  const State s{0.0, 0.0, 0.3};
  const double c0 = oxygen_profile(s, 1.15, 0.0);
  CHECK(c0 == doctest::Approx(0.9118).epsilon(1e-4));
  CHECK(c0 == doctest::Approx(oracle::radial_oxygen_quadrature(0.0, 0.3, 1.15, 0.0)).epsilon(1e-8));
  for (double r : {0.05, 0.2, 0.31, 0.6}) {
    const State t{0.1, 0.2, 0.3};
    CHECK(oxygen_profile(t, 1.15, r) ==
          doctest::Approx(oracle::radial_oxygen_quadrature(0.1, 0.3, 1.15, std::max(r, 0.1))).epsilon(1e-8));
  }
}

TEST_CASE("oxygen profile equals kappa_death inside a consistent necrotic core") {
  const Params p = table2();
  const State s = interfaces_from_rp(0.33, p.reduced());
  REQUIRE(s.r_n > 0.0);
  CHECK(oxygen_profile(s, p.lambda, 0.5 * s.r_n) == doctest::Approx(p.kappa_death).epsilon(1e-10));
  CHECK(oxygen_profile(s, p.lambda, s.r_q) == doctest::Approx(p.kappa_prol).epsilon(1e-10));
}

TEST_CASE("oxygen profile is C1 at r_n and r_p and monotone") {
  const double lam = 1.3;
  const State s = ref_state;
  for (double r0 : {s.r_n, s.r_p}) {
    for (double h : {1e-3, 5e-4}) {
      const double left = (oxygen_profile(s, lam, r0) - oxygen_profile(s, lam, r0 - h)) / h;
      const double right = (oxygen_profile(s, lam, r0 + h) - oxygen_profile(s, lam, r0)) / h;
      CHECK(std::abs(left - right) < 10 * h);
    }
  }
  double prev = oxygen_profile(s, lam, s.r_n);
  for (int i = 1; i <= 200; ++i) {
    const double r = s.r_n + (1.0 - s.r_n) * i / 200.0;
    const double c = oxygen_profile(s, lam, r);
    CHECK(c >= prev - 1e-15);
    prev = c;
  }
}

TEST_CASE("interfaces invert the forward relations") {
  CHECK(K_prol_of(ref_state) == doctest::Approx(0.234527).epsilon(1e-5));
  CHECK(K_death_of(ref_state) == doctest::Approx(0.250663).epsilon(1e-5));
  const ReducedParams exact{5.0, K_prol_of(ref_state), K_death_of(ref_state)};
  const State s = interfaces_from_rp(0.3, exact);
  CHECK(s.r_n == doctest::Approx(0.1).epsilon(1e-10));
  CHECK(s.r_q == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(std::abs(K_prol_of(s) - exact.K_prol) <= 1e-10);
  CHECK(std::abs(K_death_of(s) - exact.K_death) <= 1e-10);
  const State rounded = interfaces_from_rp(0.3, ref_params);
  CHECK(rounded.r_n == doctest::Approx(0.1).epsilon(1e-4));
  CHECK(rounded.r_q == doctest::Approx(0.2).epsilon(1e-4));
}

TEST_CASE("interfaces degenerate cases") {
  const ReducedParams abundant{1.0, INFINITY, INFINITY};
  const State s = interfaces_from_rp(0.5, abundant);
  CHECK(s.r_n == 0.0);
  CHECK(s.r_q == 0.0);
  Params lam0 = table2();
  lam0.lambda = 0.0;
  CHECK(interfaces_from_rp(0.5, lam0.reduced()).r_q == 0.0);
  const ReducedParams equal{1.0, 0.2, 0.2};
  const State e = interfaces_from_rp(0.4, equal);
  CHECK(e.r_n > 0.0);
  CHECK(e.r_q == e.r_n);
  CHECK_THROWS_AS(interfaces_from_rp(1.0, ref_params), InfeasibleState);
  CHECK_THROWS_AS(interfaces_from_rp(0.0, ref_params), InfeasibleState);
}

TEST_CASE("exponential phase matches the closed form with RK4 order") {
  const ReducedParams p{1.0, INFINITY, INFINITY};
  const auto tr = integrate(0.05, p, 1.0, 1e-3);
  CHECK(tr.states.back().r_p == doctest::Approx(0.05 * std::exp(0.5)).epsilon(1e-6));
  double errs[2];
  int i = 0;
  for (double dt : {0.1, 0.05}) {
    const auto t = integrate(0.05, p, 1.0, dt);
    errs[i++] = std::abs(t.states.back().r_p - 0.05 * std::exp(0.5));
  }
  CHECK(std::log2(errs[0] / errs[1]) >= 3.9);
}

TEST_CASE("stationary state is a fixed point of step") {
  const State s = stationary_state(table2().reduced());
  const State next = step(s, table2().reduced(), 1e-3);
  CHECK(next.r_p == doctest::Approx(s.r_p).epsilon(1e-9));
}

TEST_CASE("Table 2 stationary state and sigmoid plateau") {
  const auto p = table2().reduced();
  CHECK(p.K_prol == doctest::Approx(0.208696).epsilon(1e-5));
  CHECK(p.K_death == doctest::Approx(0.243478).epsilon(1e-5));
  const State eq = stationary_state(p);
  CHECK(eq.r_n == doctest::Approx(0.12844980).epsilon(1e-6));
  CHECK(eq.r_q == doctest::Approx(0.27679702).epsilon(1e-6));
  CHECK(eq.r_p == doctest::Approx(0.31446894).epsilon(1e-6));
  CHECK(std::abs(area_rate(eq, p.mu_death)) < 1e-10);
  const auto tr = integrate(0.1, p, 60.0, 1e-3, 100);
  const double Vp = std::numbers::pi * tr.states.back().r_p * tr.states.back().r_p;
  CHECK(Vp == doctest::Approx(std::numbers::pi * eq.r_p * eq.r_p).epsilon(1e-6));
  CHECK(Vp < std::numbers::pi * std::exp(-2.0));
}

TEST_CASE("round trip through params_from_equilibrium") {
  const ReducedParams p = params_from_equilibrium(ref_state);
  CHECK(p.mu_death == doctest::Approx(5.0));
  const State s = stationary_state(p);
  CHECK(s.r_n == doctest::Approx(0.1).epsilon(1e-8));
  CHECK(s.r_q == doctest::Approx(0.2).epsilon(1e-8));
  CHECK(s.r_p == doctest::Approx(0.3).epsilon(1e-8));
  const State rounded = stationary_state(ref_params);
  CHECK(rounded.r_p == doctest::Approx(0.3).epsilon(1e-4));
  CHECK(params_from_equilibrium({0.1, 0.3 - 1e-12, 0.3}).mu_death < 1e-9);
  CHECK_THROWS_AS(params_from_equilibrium({0.0, 0.2, 0.3}), InfeasibleState);
  Params lam0 = table2();
  lam0.lambda = 1e-9;
  CHECK_THROWS_AS(stationary_state(lam0.reduced()), NoEquilibrium);
}

TEST_CASE("radial eigenvalue agrees with a finite-difference Jacobian") {
  const auto ev = radial_eigenvalue(ref_state, 5.0);
  CHECK(ev.value == doctest::Approx(-2.5808789).epsilon(1e-6));
  const ReducedParams p = params_from_equilibrium(ref_state);
  auto G = [&](double s) { return area_rate(interfaces_from_rp(std::sqrt(s), p), p.mu_death); };
  const double d = 1e-6;
  const double fd = (G(0.09 + d) - G(0.09 - d)) / (2 * d);
  CHECK(std::abs(fd - ev.value) / std::abs(ev.value) < 1e-4);

  const State eq = stationary_state(table2().reduced());
  const double ev2 = radial_eigenvalue(eq, 1.35).value;
  CHECK(ev2 == doctest::Approx(-0.86416).epsilon(1e-4));
}

TEST_CASE("eigenvalue limits") {
  const auto at0 = radial_eigenvalue({0.0, 0.2, 0.3}, 1.0);
  CHECK(at0.limit);
  CHECK(at0.value == doctest::Approx(1.0 + 2.0 * std::log(0.3)));
  const auto at1 = radial_eigenvalue({0.2, 0.2, 0.3}, 1.0);
  CHECK(at1.limit);
  CHECK(at1.value == doctest::Approx(1.0 - std::log(0.3) / std::log(0.2) * 2.0));
  const auto near1 = radial_eigenvalue({0.2, 0.2 * (1 + 1e-6), 0.3}, 1.0);
  CHECK(near1.value == doctest::Approx(at1.value).epsilon(1e-5));
}

TEST_CASE("trajectory csv") {
  const auto tr = integrate(0.1, table2().reduced(), 0.002, 1e-3);
  std::ostringstream out;
  write_trajectory_csv(out, tr);
  CHECK(out.str().rfind("t,r_n,r_q,r_p,V_n,V_q,V_p\n0,0,0,0.1,0,0,", 0) == 0);
}
