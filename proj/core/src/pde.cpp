#include "tumor/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "tumor/contour.hpp"
#include "tumor/errors.hpp"
#include "tumor/laplace.hpp"
#include "tumor/metrics.hpp"
#include "tumor/radial.hpp"

namespace tumor::pde {
namespace {

bool nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

double cutoff_value(const Params& p) {
  return p.cutoff == Cutoff::kappa_death ? p.kappa_death : p.kappa_prol;
}

std::vector<DirichletValue> source_ring(const Grid& grid) {
  std::vector<DirichletValue> ring;
  for (std::size_t v = 0; v < grid.size(); ++v) {
    const Point c = grid.center(static_cast<int>(v));
    if (std::hypot(c.x, c.y) >= 1.0) ring.push_back({static_cast<int>(v), 1.0});
  }
  return ring;
}

std::vector<std::uint8_t> tumor_mask(const Field& rho, double thresh) {
  std::vector<std::uint8_t> t(rho.size(), 0);
  for (std::size_t v = 0; v < rho.size(); ++v) t[v] = rho[v] >= thresh;
  return t;
}

bool reaches_source(const std::vector<std::uint8_t>& tumor, const Grid& grid) {
  for (std::size_t v = 0; v < tumor.size(); ++v) {
    if (!tumor[v]) continue;
    const Point c = grid.center(static_cast<int>(v));
    if (std::hypot(c.x, c.y) >= 1.0) return true;
  }
  return false;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit(std::uint64_t x) { return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53; }

Field oxygen_active_set(const Field& rho, const std::vector<std::uint8_t>& tumor,
                        const Params& p, const Field* warm, OxygenReport* report) {
  const Grid& grid = rho.grid();
  const double cut = cutoff_value(p);
  const double ih2 = 1.0 / (grid.h() * grid.h());
  const auto ring = source_ring(grid);
  std::vector<std::uint8_t> on_ring(grid.size(), 0);
  for (const auto& d : ring) on_ring[d.voxel] = 1;

  Field src(grid, 0.0);
  for (std::size_t v = 0; v < grid.size(); ++v)
    if (tumor[v] && !on_ring[v]) src[v] = -p.lambda * rho[v];

  std::vector<std::uint8_t> active(grid.size(), 0);
  if (warm)
    for (std::size_t v = 0; v < grid.size(); ++v)
      active[v] = tumor[v] && !on_ring[v] && (*warm)[v] <= cut;

  Field c;
  Field guess = warm ? *warm : Field(grid, 1.0);
  for (int it = 1;; ++it) {
    std::vector<DirichletValue> dir = ring;
    for (std::size_t v = 0; v < grid.size(); ++v)
      if (active[v]) dir.push_back({static_cast<int>(v), cut});
    SolveOptions opt;
    opt.rel_tol = 1e-12;
    opt.initial_guess = &guess;
    c = solve_laplace(grid, src, dir, {}, opt);

    // Multiplier -Lap c + lambda rho on the contact set, 0 off it.
    std::vector<std::uint8_t> next(grid.size(), 0);
    bool changed = false;
    for (std::size_t v = 0; v < grid.size(); ++v) {
      if (!tumor[v] || on_ring[v]) continue;
      double mult = 0.0;
      if (active[v]) {
        double lap = 0.0;
        for (int w : grid.neighbors(static_cast<int>(v)))
          if (w >= 0) lap += (c[v] - c[w]) * ih2;
        mult = lap + p.lambda * rho[v];
      }
      next[v] = mult + ih2 * (cut - c[v]) > 0.0;
      changed |= next[v] != active[v];
    }
    if (!changed) {
      if (report) *report = {it, 0.0};
      return c;
    }
    if (it >= p.oxygen_max_iter)
      throw NumericalError("oxygen active-set iteration did not settle", 1.0);
    active.swap(next);
    guess = c;
  }
}

Field oxygen_pseudo_time(const Field& rho, const std::vector<std::uint8_t>& tumor,
                         const Params& p, const Field* warm, OxygenReport* report) {
  const Grid& grid = rho.grid();
  const double cut = cutoff_value(p);
  LaplaceOperator op{grid, {}, source_ring(grid), {}, std::vector<double>(grid.size(), 1.0 / p.dtau)};
  const LaplaceFactorization fact(std::move(op));
  Field c = warm ? *warm : Field(grid, 1.0);
  Field src(grid, 0.0);
  double change = 0.0;
  for (int it = 1; it <= p.oxygen_max_iter; ++it) {
    for (std::size_t v = 0; v < grid.size(); ++v)
      src[v] = c[v] / p.dtau - (tumor[v] && c[v] >= cut ? p.lambda * rho[v] : 0.0);
    Field next = fact.solve(src);
    change = 0.0;
    for (std::size_t v = 0; v < grid.size(); ++v) change = std::max(change, std::abs(next[v] - c[v]));
    c = std::move(next);
    if (change < p.oxygen_tol) {
      if (report) *report = {it, change};
      return c;
    }
  }
  throw NumericalError("oxygen pseudo-time iteration did not converge in " +
                           std::to_string(p.oxygen_max_iter) + " sweeps",
                       change);
}

}  // namespace

void validate(const Params& p) {
  const double vals[] = {p.mu_prol, p.mu_death, p.lambda, p.kappa_prol, p.kappa_death,
                         p.sigma, p.omega};
  for (double v : vals)
    if (!nonneg(v)) throw ConfigError("PDE parameters must be finite and nonnegative");
  if (p.kappa_death > p.kappa_prol) throw ConfigError("kappa_death must not exceed kappa_prol");
  if (!(p.rho_thresh > 0.0 && p.rho_thresh < 1.0))
    throw ConfigError("rho_thresh must lie in (0, 1)");
  if (!std::isfinite(p.p_ext)) throw ConfigError("p_ext must be finite");
  if (!(p.f_min >= 0.0 && p.f_min <= 1.0)) throw ConfigError("f_min must lie in [0, 1]");
  if (!(p.curvature_smoothing >= 0.0)) throw ConfigError("curvature_smoothing must be >= 0");
  if (!(p.dtau > 0.0)) throw ConfigError("dtau must be positive");
  if (!(p.oxygen_tol > 0.0)) throw ConfigError("oxygen_tol must be positive");
  if (p.oxygen_max_iter < 1) throw ConfigError("oxygen_max_iter must be >= 1");
}

std::vector<std::uint8_t> classify_regions(const Field& c, const Field& rho, const Params& p) {
  if (!(c.grid() == rho.grid())) throw ConfigError("fields live on different grids");
  std::vector<std::uint8_t> r(rho.size(), exterior);
  for (std::size_t v = 0; v < rho.size(); ++v) {
    if (!(rho[v] >= p.rho_thresh)) continue;
    if (c[v] >= p.kappa_prol) r[v] = proliferative;
    // the active-set solve holds the necrotic core at exactly kappa_death
    else if (c[v] < p.kappa_death + 1e-9) r[v] = necrotic;
    else r[v] = quiescent;
  }
  return r;
}

Boundary tumor_boundary(const Field& rho, const Params& p) {
  const Grid& grid = rho.grid();
  Boundary b;
  b.tumor = tumor_mask(rho, p.rho_thresh);
  for (std::size_t v = 0; v < grid.size(); ++v) {
    if (b.tumor[v]) continue;
    for (int w : grid.neighbors(static_cast<int>(v))) {
      if (w >= 0 && b.tumor[w]) {
        b.pinned.push_back(static_cast<int>(v));
        break;
      }
    }
  }
  b.pinned_value.assign(b.pinned.size(), p.p_ext);
  if (p.sigma > 0.0 && !b.pinned.empty()) {
    std::vector<Contour> kept;
    for (auto& c : filter_contours(extract_contours(rho, p.rho_thresh), p.f_min)) {
      try {
        kept.push_back(with_curvature(smooth_contour(std::move(c), p.curvature_smoothing * grid.h())));
      } catch (const GeometryError&) {
      }
    }
    const double reach = 2.0 * grid.h();
    for (std::size_t k = 0; k < b.pinned.size(); ++k) {
      const Point x = grid.center(b.pinned[k]);
      double best = reach;
      double C = 0.0;
      for (const Contour& c : kept) {
        for (std::size_t i = 0; i < c.size(); ++i) {
          const double d = distance(x, c.points[i]);
          if (d <= best) {
            best = d;
            C = c.curvature[i];
          }
        }
      }
      b.pinned_value[k] = p.p_ext + p.sigma * C;
    }
  }
  return b;
}

Field solve_pressure(const Field& rho, const std::vector<std::uint8_t>& regions,
                     const Boundary& b, const Params& p) {
  const Grid& grid = rho.grid();
  if (regions.size() != grid.size() || b.tumor.size() != grid.size())
    throw ConfigError("region mask does not match the grid");
  if (b.pinned.empty()) throw InfeasibleState("pressure solve on an empty tumor");
  LaplaceOperator op{grid, b.tumor, {}, {}, {}};
  for (std::size_t k = 0; k < b.pinned.size(); ++k) {
    op.domain[b.pinned[k]] = 1;
    op.dirichlet.push_back({b.pinned[k], b.pinned_value[k]});
  }
  Field src(grid, 0.0);
  for (std::size_t v = 0; v < grid.size(); ++v) {
    if (!b.tumor[v]) continue;
    if (regions[v] == proliferative) src[v] = p.mu_prol;
    else if (regions[v] == necrotic) src[v] = -p.mu_death;
  }
  const LaplaceFactorization fact(std::move(op));
  Field out = fact.solve(src, {}, p.p_ext);
  if (!out.all_finite()) throw NumericalError("non-finite pressure");
  return out;
}

Field solve_pressure(const Field& rho, const std::vector<std::uint8_t>& regions,
                     const Params& p) {
  return solve_pressure(rho, regions, tumor_boundary(rho, p), p);
}

Field solve_oxygen(const Field& rho, const Params& p, const Field* warm, OxygenReport* report) {
  validate(p);
  if (warm && !(warm->grid() == rho.grid())) throw ConfigError("warm start on a different grid");
  const auto tumor = tumor_mask(rho, p.rho_thresh);
  return p.oxygen_method == OxygenMethod::active_set
             ? oxygen_active_set(rho, tumor, p, warm, report)
             : oxygen_pseudo_time(rho, tumor, p, warm, report);
}

Field growth_term(const Field& rho, const std::vector<std::uint8_t>& regions, const Params& p) {
  Field g(rho.grid(), 0.0);
  for (std::size_t v = 0; v < rho.size(); ++v) {
    if (regions[v] == proliferative) g[v] = p.mu_prol * rho[v];
    else if (regions[v] == necrotic) g[v] = -p.mu_death * rho[v];
  }
  return g;
}

Field flux_divergence(const Field& rho, const Field& pressure, const Field& gamma,
                      const std::vector<std::uint8_t>& tumor) {
  const Grid& grid = rho.grid();
  const double ih2 = 1.0 / (grid.h() * grid.h());
  Field F(grid, 0.0);
  for (std::size_t vi = 0; vi < grid.size(); ++vi) {
    const int v = static_cast<int>(vi);
    double f = gamma[v];
    for (int w : grid.neighbors(v)) {
      if (w < 0 || !(tumor[v] || tumor[w])) continue;
      const double dp = pressure[v] - pressure[w];
      const double donor = dp >= 0.0 ? rho[v] : rho[w];
      f -= ih2 * dp * donor;
    }
    F[v] = f;
  }
  return F;
}

double gaussian(std::uint64_t seed, std::uint64_t step, std::uint64_t voxel) {
  const std::uint64_t k = splitmix(splitmix(splitmix(seed) ^ step) ^ voxel);
  const double u1 = unit(k);
  const double u2 = unit(splitmix(k));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

StepReport advect(Field& rho, const Field& flux, double omega, std::uint64_t seed,
                  std::uint64_t step, double dt_max) {
  StepReport rep;
  for (std::size_t v = 0; v < flux.size(); ++v) {
    if (!std::isfinite(flux[v]))
      throw NumericalError("non-finite density flux at voxel " + std::to_string(v) +
                           " (rho = " + std::to_string(rho[v]) + ")");
    rep.max_flux = std::max(rep.max_flux, std::abs(flux[v]));
  }
  rep.dt = rep.max_flux > 0.0 ? std::min(dt_max, 0.1 / rep.max_flux) : dt_max;
  const double area = rho.grid().h() * rho.grid().h();
  for (std::size_t v = 0; v < flux.size(); ++v) {
    const double d = rep.dt * flux[v];
    if (d == 0.0) continue;
    double r = rho[v] + d;
    if (omega > 0.0) r += omega * std::sqrt(std::abs(d)) * gaussian(seed, step, v);
    if (r < 0.0) {
      rep.clamped_mass -= r * area;
      r = 0.0;
    }
    rho[v] = r;
  }
  return rep;
}

State disk(const Grid& grid, double radius, int k, double eps) {
  if (!(radius > 0.0) || !(radius + std::abs(eps) < 1.0))
    throw ConfigError("initial radius must satisfy 0 < r and r + |eps| < 1");
  if (k < 0) throw ConfigError("perturbation mode must be nonnegative");
  State s{Field(grid, 0.0), Field(grid, 1.0), Field(grid, 0.0), 0.0, 0};
  for (std::size_t v = 0; v < grid.size(); ++v) {
    const Point c = grid.center(static_cast<int>(v));
    const double th = std::atan2(c.y, c.x);
    if (std::hypot(c.x, c.y) <= radius + eps * std::cos(k * th)) s.rho[v] = 1.0;
  }
  return s;
}

Sample measure(const State& s, const Params& p) {
  const auto regions = classify_regions(s.c, s.rho, p);
  Sample out;
  out.t = s.t;
  Field w(s.rho.grid(), 0.0);
  for (std::size_t v = 0; v < regions.size(); ++v) {
    switch (regions[v]) {
      case proliferative: ++out.n_prolif; break;
      case quiescent: ++out.n_quiesc; break;
      case necrotic: ++out.n_necrotic; break;
      default: continue;
    }
    w[v] = s.rho[v];
  }
  out.volumes = metrics::volumes_from_counts(out.n_prolif, out.n_quiesc, out.n_necrotic,
                                             s.rho.grid().h());
  out.com = metrics::center_of_mass(w);
  out.roundness = std::numeric_limits<double>::quiet_NaN();
  for (const Contour& c : extract_contours(s.rho, p.rho_thresh)) {
    if (c.hole) continue;
    if (c.size() >= 4)
      out.roundness = metrics::roundness(smooth_contour(c, s.rho.grid().h())).value;
    break;
  }
  return out;
}

Result simulate(State initial, const SimConfig& cfg, const Observer& observer) {
  const Params& prm = cfg.params;
  validate(prm);
  if (!(cfg.t_end >= initial.t)) throw ConfigError("t_end precedes the initial time");
  if (!(cfg.sample_dt > 0.0)) throw ConfigError("sample_dt must be positive");
  Result res;
  State& s = res.final_state;
  s = std::move(initial);
  const double h = s.rho.grid().h();
  double next_sample = s.t;
  const double eps = 1e-12;
  while (true) {
    s.c = solve_oxygen(s.rho, prm, &s.c);
    const auto regions = classify_regions(s.c, s.rho, prm);
    const Boundary b = tumor_boundary(s.rho, prm);
    if (b.pinned.empty()) {
      res.end_reason = "extinct";
      break;
    }
    if (reaches_source(b.tumor, s.rho.grid())) {
      res.end_reason = "source_reached";
      break;
    }
    s.p = solve_pressure(s.rho, regions, b, prm);
    if (s.t >= next_sample - eps) {
      const Sample smp = measure(s, prm);
      res.series.push_back(smp);
      if (observer) observer(s, smp);
      while (next_sample <= s.t + eps) next_sample += cfg.sample_dt;
    }
    if (s.t >= cfg.t_end - eps) {
      res.end_reason = "t_end";
      break;
    }
    const Field F = flux_divergence(s.rho, s.p, growth_term(s.rho, regions, prm), b.tumor);
    const StepReport rep = advect(s.rho, F, prm.omega, cfg.seed, s.step,
                                  std::min(h, cfg.t_end - s.t));
    res.clamped_mass += rep.clamped_mass;
    s.t += rep.dt;
    ++s.step;
  }
  res.steps = s.step;
  return res;
}

EffectiveParams fit_effective_params(const std::vector<Sample>& series, double mu_death_dlcm,
                                     double kappa_prol) {
  auto radius = [](double V) { return std::sqrt(V / std::numbers::pi); };
  std::vector<double> t, r;
  for (const Sample& s : series) {
    if (s.volumes.V_q > 0.0) break;
    if (!(s.volumes.V_p > 0.0)) continue;
    t.push_back(s.t);
    r.push_back(radius(s.volumes.V_p));
  }
  if (t.size() < 5)
    throw ConfigError("no exponential window: " + std::to_string(t.size()) +
                      " leading samples without a quiescent region (need 5)");
  const auto fit = metrics::fit_growth(t, r);
  EffectiveParams out;
  out.mu_prol = 2.0 * fit.rate;
  out.exp_samples = fit.samples;
  if (!(out.mu_prol > 0.0)) throw ConfigError("fitted growth rate is not positive");
  out.mu_death = mu_death_dlcm / out.mu_prol;

  std::vector<const Sample*> late;
  for (const Sample& s : series)
    if (s.volumes.V_q > 0.0) late.push_back(&s);
  const std::size_t start = late.size() - late.size() / 4;
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = start; i < late.size(); ++i) {
    const Sample& s = *late[i];
    const radial::State st{radius(s.volumes.V_n), radius(s.volumes.V_q), radius(s.volumes.V_p)};
    const double K = radial::K_prol_of(st);
    if (!(K > 0.0)) continue;
    sum += 4.0 * (1.0 - kappa_prol) / K;
    ++n;
  }
  if (n < 5)
    throw ConfigError("no stationary window: " + std::to_string(n) +
                      " late samples with a quiescent region (need 5)");
  out.lambda = sum / n;
  out.stationary_samples = n;
  return out;
}

}  // namespace tumor::pde
