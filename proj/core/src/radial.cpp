#include "tumor/radial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

#include "tumor/errors.hpp"

namespace tumor::radial {
namespace {

// x^2 log x^2 with the continuous extension 0 at x = 0.
double x2logx2(double x) { return x > 0.0 ? x * x * std::log(x * x) : 0.0; }

// Bisection for a decreasing function f on [lo, hi] with f(lo) >= 0 >= f(hi).
template <class F>
double bisect_decreasing(F f, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void validate(const State& s) {
  const bool ok = std::isfinite(s.r_n) && std::isfinite(s.r_q) && std::isfinite(s.r_p) &&
                  0.0 <= s.r_n && s.r_n <= s.r_q && s.r_q <= s.r_p && s.r_p < 1.0;
  if (!ok) {
    std::ostringstream m;
    m << "radial state (" << s.r_n << ", " << s.r_q << ", " << s.r_p
      << ") violates 0 <= r_n <= r_q <= r_p < 1";
    throw InfeasibleState(m.str());
  }
}

double Params::K_prol() const { return 4.0 * (1.0 - kappa_prol) / lambda; }
double Params::K_death() const { return 4.0 * (1.0 - kappa_death) / lambda; }
ReducedParams Params::reduced() const {
  validate(*this);
  return {mu_death, lambda > 0.0 ? K_prol() : INFINITY, lambda > 0.0 ? K_death() : INFINITY};
}

void validate(const Params& p) {
  if (!(p.lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  if (!(p.kappa_death > 0.0 && p.kappa_death <= p.kappa_prol && p.kappa_prol <= 1.0))
    throw ConfigError("need 0 < kappa_death <= kappa_prol <= 1");
  if (!(p.mu_death >= 0.0)) throw ConfigError("mu_death must be nonnegative");
}

void validate(const ReducedParams& p) {
  if (!(p.mu_death >= 0.0)) throw ConfigError("mu_death must be nonnegative");
  if (!(p.K_prol >= 0.0 && p.K_death >= p.K_prol))
    throw ConfigError("need K_death >= K_prol >= 0");
}

double oxygen_profile(const State& s, double lambda, double r) {
  validate(s);
  if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("radius must lie in [0, 1]");
  const double rp2 = s.r_p * s.r_p;
  const double rn2 = s.r_n * s.r_n;
  auto inner = [&](double x) {
    const double rn_log = rn2 > 0.0 ? rn2 * std::log(x) : 0.0;
    return 1.0 + 0.5 * lambda *
                     ((s.r_p > 0.0 ? rp2 * std::log(s.r_p) : 0.0) - rn_log +
                      0.5 * (x * x - rp2));
  };
  if (r >= s.r_p) return 1.0 + 0.5 * lambda * (rp2 - rn2) * std::log(r);
  if (r >= s.r_n) return inner(r);
  return inner(s.r_n);
}

double K_prol_of(const State& s) {
  const double rp2 = s.r_p * s.r_p;
  const double rq_term = s.r_n > 0.0 ? s.r_n * s.r_n * std::log(s.r_q * s.r_q) : 0.0;
  return -x2logx2(s.r_p) + rq_term - s.r_q * s.r_q + rp2;
}

double K_death_of(const State& s) {
  return -x2logx2(s.r_p) + x2logx2(s.r_n) - s.r_n * s.r_n + s.r_p * s.r_p;
}

State interfaces_from_rp(double r_p, const ReducedParams& p) {
  if (!(r_p > 0.0 && r_p < 1.0)) {
    std::ostringstream m;
    m << "tumor radius " << r_p << " outside (0, 1)";
    throw InfeasibleState(m.str());
  }
  const double rp2 = r_p * r_p;
  const double g = rp2 - x2logx2(r_p);  // oxygen deficit scale at r = 0

  double r_n = 0.0;
  if (g > p.K_death) {
    r_n = bisect_decreasing(
        [&](double x) { return K_death_of({x, x, r_p}) - p.K_death; }, 0.0, r_p);
  }
  const double h_lo = r_n > 0.0 ? K_prol_of({r_n, r_n, r_p}) : g;
  const double h_hi = -(rp2 - r_n * r_n) * std::log(rp2);
  double r_q;
  if (h_lo <= p.K_prol)
    r_q = r_n;
  else if (p.K_prol < h_hi)
    r_q = r_p;
  else
    r_q = bisect_decreasing(
        [&](double x) { return K_prol_of({r_n, x, r_p}) - p.K_prol; }, r_n, r_p);
  return {r_n, r_q, r_p};
}

double area_rate(const State& s, double mu_death) {
  return -mu_death * s.r_n * s.r_n - s.r_q * s.r_q + s.r_p * s.r_p;
}

State step(const State& s, const ReducedParams& p, double dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  auto rate = [&](double a) {
    if (!(a > 0.0 && a < 1.0)) {
      std::ostringstream m;
      m << "tumor radius " << std::sqrt(std::max(a, 0.0))
        << " left (0, 1); the avascular model no longer applies";
      throw InfeasibleState(m.str());
    }
    return area_rate(interfaces_from_rp(std::sqrt(a), p), p.mu_death);
  };
  const double a0 = s.r_p * s.r_p;
  const double k1 = rate(a0);
  const double k2 = rate(a0 + 0.5 * dt * k1);
  const double k3 = rate(a0 + 0.5 * dt * k2);
  const double k4 = rate(a0 + dt * k3);
  const double a1 = a0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  rate(a1);
  return interfaces_from_rp(std::sqrt(a1), p);
}

Trajectory integrate(double r_p0, const ReducedParams& p, double t_end, double dt,
                     int record_every) {
  validate(p);
  if (!(t_end >= 0.0) || !(dt > 0.0)) throw ConfigError("need t_end >= 0 and dt > 0");
  if (record_every < 1) record_every = 1;
  Trajectory tr;
  State s = interfaces_from_rp(r_p0, p);
  tr.times.push_back(0.0);
  tr.states.push_back(s);
  const long n = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  for (long i = 1; i <= n; ++i) {
    const double h = std::min(dt, t_end - (i - 1) * dt);
    try {
      s = step(s, p, h);
    } catch (const InfeasibleState& e) {
      tr.halted = true;
      tr.halt_reason = e.what();
      break;
    }
    if (i % record_every == 0 || i == n) {
      tr.times.push_back(i == n ? t_end : i * dt);
      tr.states.push_back(s);
    }
  }
  return tr;
}

State stationary_state(const ReducedParams& p) {
  validate(p);
  if (!(p.mu_death > 0.0)) throw ConfigError("stationary state needs mu_death > 0");
  auto f = [&](double r) { return area_rate(interfaces_from_rp(r, p), p.mu_death); };
  constexpr int n = 4000;
  double lo = 1e-6;
  double flo = f(lo);
  for (int i = 1; i <= n; ++i) {
    const double r = std::min(1e-6 + i * (1.0 / n), 1.0 - 1e-12);
    const double fr = f(r);
    if (flo > 0.0 && fr <= 0.0) {
      const double root = bisect_decreasing(f, lo, r);
      return interfaces_from_rp(root, p);
    }
    lo = r;
    flo = fr;
  }
  throw NoEquilibrium("the area rate stays positive on (0, 1): no stationary tumor radius");
}

Eigenvalue radial_eigenvalue(const State& s, double mu_death) {
  validate(s);
  if (!(s.r_p > 0.0)) throw InfeasibleState("eigenvalue needs r_p > 0");
  const double lrp = std::log(s.r_p);
  if (s.r_n == 0.0) return {1.0 + 2.0 * lrp, true};
  const double lrn = std::log(s.r_n);
  const double eta = (s.r_n / s.r_q) * (s.r_n / s.r_q);
  double factor;  // 2 log(r_q/r_n) r_q^2 / (r_q^2 - r_n^2) = -log(eta)/(1 - eta)
  bool limit = false;
  if (1.0 - eta < 1e-8) {
    factor = 1.0 + 0.5 * (1.0 - eta);
    limit = true;
  } else {
    factor = -std::log(eta) / (1.0 - eta);
  }
  return {1.0 - lrp / lrn * (mu_death + factor), limit};
}

ReducedParams params_from_equilibrium(const State& s) {
  validate(s);
  if (!(s.r_p > 0.0)) throw InfeasibleState("equilibrium needs r_p > 0");
  const double gap = s.r_p * s.r_p - s.r_q * s.r_q;
  double mu;
  if (s.r_n == 0.0) {
    if (gap != 0.0)
      throw InfeasibleState("r_n = 0 with r_q < r_p: no death rate makes this stationary");
    mu = 0.0;
  } else {
    mu = gap / (s.r_n * s.r_n);
  }
  return {mu, K_prol_of(s), K_death_of(s)};
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,r_n,r_q,r_p,V_n,V_q,V_p\n";
  char buf[256];
  constexpr double pi = std::numbers::pi;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const State& s = traj.states[i];
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", traj.times[i],
                  s.r_n, s.r_q, s.r_p, pi * s.r_n * s.r_n, pi * s.r_q * s.r_q,
                  pi * s.r_p * s.r_p);
    out << buf;
  }
}

}  // namespace tumor::radial
