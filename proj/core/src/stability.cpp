#include "tumor/stability.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "tumor/errors.hpp"

namespace tumor::stability {
namespace {

// (x / y)^n computed in log space; 0^0 = 1.
double ratio_pow(double x, double y, double n) {
  if (n == 0.0) return 1.0;
  if (x == 0.0) return 0.0;
  return std::exp(n * std::log(x / y));
}

double weight(double D) { return std::isinf(D) ? 1.0 : D / (1.0 + D); }
double saffman_factor(double D) { return std::isinf(D) ? -1.0 : (1.0 - D) / (1.0 + D); }

void check_mode(int k) {
  if (k < 1) throw ConfigError("mode number must be >= 1");
}

}  // namespace

void validate(const Input& in) {
  radial::validate(in.state);
  if (!(in.state.r_p > 0.0)) throw InfeasibleState("stability analysis needs r_p > 0");
  if (!(in.mu_death >= 0.0)) throw ConfigError("mu_death must be nonnegative");
  if (!(in.D_ext > 0.0)) throw ConfigError("D_ext must be positive or infinite");
  if (!(in.sigma >= 0.0)) throw ConfigError("sigma must be nonnegative");
}

double growth_discriminant(const radial::State& s, double mu_death) {
  radial::validate(s);
  if (!(s.r_p > 0.0)) throw InfeasibleState("growth discriminant needs r_p > 0");
  const double rp2 = s.r_p * s.r_p;
  return -(mu_death * s.r_n * s.r_n + s.r_q * s.r_q - rp2) / (2.0 * rp2);
}

double radial_pressure_profile(const Input& in, double r) {
  validate(in);
  if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("radius must lie in [0, 1]");
  const auto& s = in.state;
  const double mu = in.mu_death;
  const double rn2 = s.r_n * s.r_n;
  const double rq2 = s.r_q * s.r_q;
  const double rp2 = s.r_p * s.r_p;
  const double excess = mu * rn2 + rq2 - rp2;
  auto p_ext = [&](double x) {
    if (std::isinf(in.D_ext)) return in.p_ext;
    return in.p_ext + excess / (2.0 * in.D_ext) * std::log(x);
  };
  if (r >= s.r_p) return p_ext(r);
  const double rim = p_ext(s.r_p) + in.sigma / s.r_p;
  auto p_p = [&](double x) {
    const double sinks = mu * rn2 + rq2;
    return (sinks > 0.0 ? sinks * 0.5 * std::log(x / s.r_p) : 0.0) - 0.25 * (x * x - rp2) + rim;
  };
  if (r >= s.r_q) return p_p(r);
  auto p_q = [&](double x) {
    return p_p(s.r_q) + (rn2 > 0.0 ? 0.5 * mu * rn2 * std::log(x / s.r_q) : 0.0);
  };
  if (r >= s.r_n) return p_q(r);
  return p_q(s.r_n) + 0.25 * mu * (r * r - rn2);
}

PerturbationResponse perturbation_response(const radial::State& s, int k) {
  radial::validate(s);
  check_mode(k);
  if (!(s.r_p > 0.0)) throw InfeasibleState("perturbation response needs r_p > 0");
  const double kk = k;
  const double tail = (1.0 - std::pow(s.r_p, 2.0 * kk)) / (1.0 - std::pow(s.r_n, 2.0 * kk));
  PerturbationResponse out;
  out.k = k;
  out.zeta_n_ratio = ratio_pow(s.r_n, s.r_p, kk - 1.0) * tail;
  // (r_q^2k - r_n^2k)/(r_q^2 - r_n^2) = r_q^(2k-2) sum_{j<k} eta^j, finite as r_n -> r_q.
  const double eta = s.r_q > 0.0 ? (s.r_n / s.r_q) * (s.r_n / s.r_q) : 0.0;
  double sum = 0.0;
  double term = 1.0;
  for (int j = 0; j < k; ++j) {
    sum += term;
    term *= eta;
    if (term < 1e-300) break;
  }
  out.zeta_q_ratio = ratio_pow(s.r_q, s.r_p, kk - 1.0) * sum / kk * tail;
  return out;
}

Dispersion dispersion(const Input& in, int k) {
  validate(in);
  check_mode(k);
  const auto& s = in.state;
  const double kk = k;
  const double w = weight(in.D_ext);
  const auto z = perturbation_response(s, k);
  Dispersion d;
  d.saffman_taylor_term =
      growth_discriminant(s, in.mu_death) * (saffman_factor(in.D_ext) * kk - 1.0);
  const double inner_raw = in.mu_death * ratio_pow(s.r_n, s.r_p, kk + 1.0) * z.zeta_n_ratio +
                           ratio_pow(s.r_q, s.r_p, kk + 1.0) * z.zeta_q_ratio;
  d.inner_term = 0.0 - w * inner_raw;
  d.surface_term = 0.0 - w * in.sigma * kk * (kk * kk - 1.0) / (s.r_p * s.r_p * s.r_p);
  d.Lambda = d.saffman_taylor_term + w + d.inner_term + d.surface_term;
  return d;
}

double dispersion_limit_small_Dext(const radial::State& s, double mu_death, int k) {
  check_mode(k);
  return growth_discriminant(s, mu_death) * (k - 1.0);
}

double sigma_stable(const radial::State& s, int k) {
  radial::validate(s);
  if (k < 2) throw ConfigError("the surface tension bound is defined for modes k >= 2");
  const double kk = k;
  return s.r_p * s.r_p * s.r_p / (kk * (kk * kk - 1.0));
}

double creeping_rate(const Input& in) {
  validate(in);
  const auto& s = in.state;
  const double rn2 = s.r_n * s.r_n;
  const double rp2 = s.r_p * s.r_p;
  return weight(in.D_ext) * ((in.mu_death * rn2 + s.r_q * s.r_q) / rp2) *
         ((rp2 - rn2) / (1.0 - rn2));
}

double sigma_root(const Input& in, int k) {
  if (k < 2) throw ConfigError("surface tension does not act on modes k < 2");
  Input base = in;
  base.sigma = 0.0;
  const Dispersion d = dispersion(base, k);
  const double kk = k;
  const double slope = weight(in.D_ext) * kk * (kk * kk - 1.0) /
                       (in.state.r_p * in.state.r_p * in.state.r_p);
  return d.Lambda / slope;
}

void write_spectrum_csv(std::ostream& out, const Input& in, int k_max) {
  out << "k,Lambda,saffman_taylor_term,inner_term,surface_term\n";
  char buf[192];
  for (int k = 1; k <= k_max; ++k) {
    const Dispersion d = dispersion(in, k);
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g\n", k, d.Lambda,
                  d.saffman_taylor_term, d.inner_term, d.surface_term);
    out << buf;
  }
}

}  // namespace tumor::stability
