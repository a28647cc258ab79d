#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "tumor/errors.hpp"
#include "tumor/stability.hpp"

using namespace tumor;
using namespace tumor::stability;
using radial::State;

namespace {
const State ref{0.1, 0.2, 0.3};
Input ref_input(double sigma = 0.0, double D = infinite_D) { return {ref, 5.0, D, sigma}; }
}  // namespace

TEST_CASE("pressure profile: pure source disk") {
  const Input in{{0.0, 0.0, 0.4}, 1.0};
  for (double r : {0.0, 0.1, 0.25, 0.39})
    CHECK(radial_pressure_profile(in, r) == doctest::Approx((0.16 - r * r) / 4.0));
  CHECK(radial_pressure_profile(in, 0.7) == 0.0);
}

TEST_CASE("pressure slope at the rim gives the rim velocity") {
  for (double mu : {1.0, 5.0, 10.0}) {
    const Input in{ref, mu};
    const double h = 1e-6;
    const double h1 = 1e-4;
    const double slope = (3.0 * radial_pressure_profile(in, 0.3) - 4.0 * radial_pressure_profile(in, 0.3 - h1) +
                          radial_pressure_profile(in, 0.3 - 2.0 * h1)) / (2.0 * h1);
    const double velocity = -(1.0 / 0.6) * (mu * 0.01 + 0.04 - 0.09);
    CHECK(std::abs(-slope - velocity) < 1e-6);
  }
  const Input st = ref_input();
  const double h = 1e-6;
  CHECK(std::abs(radial_pressure_profile(st, 0.3) - radial_pressure_profile(st, 0.3 - h)) / h < 1e-5);
}

TEST_CASE("pressure profile is continuous with C1 inner interfaces and the sigma offset") {
  const Input in{ref, 5.0, 2.0, 0.01};
  const double h = 1e-7;
  for (double r0 : {0.1, 0.2}) {
    CHECK(radial_pressure_profile(in, r0 - h) == doctest::Approx(radial_pressure_profile(in, r0 + h)).epsilon(1e-6));
    const double dl = (radial_pressure_profile(in, r0) - radial_pressure_profile(in, r0 - 1e-5)) / 1e-5;
    const double dr = (radial_pressure_profile(in, r0 + 1e-5) - radial_pressure_profile(in, r0)) / 1e-5;
    CHECK(dl == doctest::Approx(dr).epsilon(1e-3));
  }
  const double jump = radial_pressure_profile(in, 0.3 - 1e-12) - radial_pressure_profile(in, 0.3 + 1e-12);
  CHECK(jump == doctest::Approx(0.01 / 0.3).epsilon(1e-6));
  // Flux compatibility: interior slope equals D_ext times exterior slope.
  const double di = (radial_pressure_profile(in, 0.3 - 1e-9) - radial_pressure_profile(in, 0.3 - 1e-5)) / (1e-5 - 1e-9);
  const double de = (radial_pressure_profile(in, 0.3 + 1e-5) - radial_pressure_profile(in, 0.3 + 1e-9)) / (1e-5 - 1e-9);
  CHECK(di == doctest::Approx(2.0 * de).epsilon(1e-3));
}

TEST_CASE("perturbation response matches the linearized interface system") {
  const auto z2 = perturbation_response(ref, 2);
  CHECK(z2.zeta_n_ratio == doctest::Approx(0.330666).epsilon(1e-5));
  CHECK(z2.zeta_q_ratio == doctest::Approx(0.413333).epsilon(1e-5));
  for (int k = 1; k <= 8; ++k) {
    const auto z = perturbation_response(ref, k);
    const auto [zn, zq] = oracle::zeta_linear_system(0.1, 0.2, 0.3, k);
    CHECK(z.zeta_n_ratio == doctest::Approx(zn).epsilon(1e-8));
    CHECK(z.zeta_q_ratio == doctest::Approx(zq).epsilon(1e-8));
    CHECK(z.zeta_n_ratio >= 0.0);
    CHECK(z.zeta_q_ratio < 1.0);
  }
  const auto z5 = perturbation_response(ref, 5);
  CHECK(z5.zeta_n_ratio == doctest::Approx(0.0123456).epsilon(1e-5));
  CHECK(z5.zeta_q_ratio == doctest::Approx(0.0526231).epsilon(1e-5));
  const auto big = perturbation_response(ref, 400);
  CHECK(big.zeta_n_ratio < 1e-100);
  CHECK(big.zeta_q_ratio < 1e-60);
}

TEST_CASE("zeta_q is continuous across r_n -> r_q") {
  for (int k : {1, 2, 5}) {
    const double a = perturbation_response({0.2, 0.2, 0.3}, k).zeta_q_ratio;
    const double b = perturbation_response({0.2 - 1e-9, 0.2, 0.3}, k).zeta_q_ratio;
    CHECK(a == doctest::Approx(b).epsilon(1e-7));
  }
  CHECK(perturbation_response({0.0, 0.2, 0.3}, 2).zeta_n_ratio == 0.0);
}

TEST_CASE("dispersion at the reference equilibrium") {
  const auto d = dispersion(ref_input(), 2);
  CHECK(d.Lambda == doctest::Approx(0.81631).epsilon(1e-4));
  CHECK(d.saffman_taylor_term == doctest::Approx(0.0).scale(1.0));
  CHECK(d.inner_term <= 0.0);
  const double s = sigma_root(ref_input(), 2);
  CHECK(s == doctest::Approx(0.0036734).epsilon(1e-4));
  CHECK(std::abs(dispersion(ref_input(s), 2).Lambda) < 1e-6);
  CHECK(std::abs(s - 0.0036733) < 5e-8);
  for (double sigma : {0.0, 0.01, 1.0})
    CHECK(dispersion(ref_input(sigma), 1).surface_term == 0.0);
}

TEST_CASE("small D_ext limit") {
  const State growing{0.05, 0.1, 0.3};
  CHECK(dispersion_limit_small_Dext(growing, 1.0, 2) > 0.0);
  CHECK(dispersion_limit_small_Dext(growing, 1.0, 1) == 0.0);
  for (int k = 2; k <= 8; ++k) {
    const double lim = dispersion_limit_small_Dext(growing, 1.0, k);
    const double gen = dispersion({growing, 1.0, 1e-6, 0.0}, k).Lambda;
    CHECK(std::abs(gen - lim) / std::abs(lim) < 1e-4);
  }
}

TEST_CASE("growth discriminant") {
  CHECK(growth_discriminant({0, 0, 0.2}, 1.0) == doctest::Approx(0.5));
  CHECK(growth_discriminant(ref, 5.0) == doctest::Approx(0.0).scale(1.0));
  CHECK(growth_discriminant(ref, 10.0) < 0.0);
}

TEST_CASE("surface tension bound") {
  CHECK(sigma_stable(ref, 2) == doctest::Approx(0.0045));
  CHECK(sigma_stable(ref, 2) >= sigma_root(ref_input(), 2));
  for (int k = 2; k < 10; ++k) CHECK(sigma_stable(ref, k + 1) < sigma_stable(ref, k));
  CHECK_THROWS_AS(sigma_stable(ref, 1), ConfigError);
  for (int k = 2; k <= 16; ++k) CHECK(dispersion(ref_input(sigma_stable(ref, k)), k).Lambda <= 0.0);
}

TEST_CASE("creeping mode") {
  CHECK(creeping_rate(ref_input()) == doctest::Approx(0.080808).epsilon(1e-4));
  CHECK(creeping_rate({{0, 0, 0.3}, 1.0}) == 0.0);
  CHECK(creeping_rate(ref_input(0.0, 1e-12)) < 1e-10);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double rp = 0.05 + 0.9 * U(rng);
    const double rq = rp * U(rng);
    const double rn = rq * U(rng);
    const double D = std::pow(10.0, -3.0 + 6.0 * U(rng));
    const Input in{{rn, rq, rp}, 10.0 * U(rng), D, U(rng)};
    CHECK(std::abs(dispersion(in, 1).Lambda - creeping_rate(in)) <= 1e-10);
    CHECK(creeping_rate(in) >= 0.0);
  }
}

TEST_CASE("stationary bound on Lambda") {
  const State eq{0.1, 0.2, 0.3};
  for (double D : {0.5, 3.0, infinite_D}) {
    for (int k = 2; k <= 12; ++k) {
      const Input in{eq, 5.0, D, 1e-3};
      const double w = std::isinf(D) ? 1.0 : D / (1 + D);
      CHECK(dispersion(in, k).Lambda < w * (1.0 - 1e-3 * k * (k * k - 1.0) / 0.027));
    }
  }
}

TEST_CASE("inner term vanishes at high modes") {
  double prev = 1e9;
  for (int k = 1; k <= 60; ++k) {
    const double t = -dispersion(ref_input(), k).inner_term;
    CHECK(t >= 0.0);
    CHECK(t <= prev + 1e-15);
    prev = t;
  }
  CHECK(prev < 1e-10);
}

TEST_CASE("spectrum csv") {
  std::ostringstream out;
  write_spectrum_csv(out, ref_input(), 3);
  const std::string s = out.str();
  CHECK(s.rfind("k,Lambda,saffman_taylor_term,inner_term,surface_term\n1,", 0) == 0);
  CHECK(s.find("\n2,0.81629") != std::string::npos);
}
