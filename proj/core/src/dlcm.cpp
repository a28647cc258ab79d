#include "tumor/dlcm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "tumor/contour.hpp"
#include "tumor/errors.hpp"
#include "tumor/laplace.hpp"

namespace tumor::dlcm {
namespace {

bool nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

// Cropped indicator of the tumor domain with a two-voxel margin.
Field domain_indicator(const Grid& g, const std::vector<std::uint8_t>& domain) {
  int i0 = g.nx(), i1 = -1, j0 = g.ny(), j1 = -1;
  for (std::size_t v = 0; v < domain.size(); ++v) {
    if (!domain[v]) continue;
    const int i = g.col(static_cast<int>(v));
    const int j = g.row(static_cast<int>(v));
    i0 = std::min(i0, i);
    i1 = std::max(i1, i);
    j0 = std::min(j0, j);
    j1 = std::max(j1, j);
  }
  if (i1 < 0) throw GeometryError("empty tumor has no contour");
  i0 = std::max(0, i0 - 2);
  j0 = std::max(0, j0 - 2);
  i1 = std::min(g.nx() - 1, i1 + 2);
  j1 = std::min(g.ny() - 1, j1 + 2);
  const int nx = std::max(3, i1 - i0 + 1);
  const int ny = std::max(3, j1 - j0 + 1);
  const Grid sub(nx, ny, g.h(), g.x0() + i0 * g.h(), g.y0() + j0 * g.h());
  Field f(sub, 0.0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (g.contains(i0 + i, j0 + j) && domain[g.index(i0 + i, j0 + j)]) f.at(i, j) = 1.0;
  return f;
}

std::vector<std::uint8_t> exterior_component(const State& s) {
  const Grid& g = s.grid;
  std::vector<std::uint8_t> ext(g.size(), 0);
  std::vector<int> stack;
  auto seed = [&](int v) {
    if (s.u[v] == 0 && !ext[v]) {
      ext[v] = 1;
      stack.push_back(v);
    }
  };
  for (int i = 0; i < g.nx(); ++i) {
    seed(g.index(i, 0));
    seed(g.index(i, g.ny() - 1));
  }
  for (int j = 0; j < g.ny(); ++j) {
    seed(g.index(0, j));
    seed(g.index(g.nx() - 1, j));
  }
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : g.neighbors(v))
      if (w >= 0) seed(w);
  }
  return ext;
}

double draw_dt(double total, std::mt19937_64& rng) {
  return std::exponential_distribution<double>(total)(rng);
}

const Event& choose(const EventSet& set, std::mt19937_64& rng) {
  const double target = std::uniform_real_distribution<double>(0.0, set.total)(rng);
  double acc = 0.0;
  for (const Event& e : set.events) {
    acc += e.rate;
    if (target < acc) return e;
  }
  return set.events.back();
}

}  // namespace

void validate(const Params& p) {
  const double vals[] = {p.D1, p.D2, p.mu_prol, p.mu_death, p.mu_deg, p.kappa_prol,
                         p.kappa_death, p.lambda, p.sigma};
  for (double v : vals)
    if (!nonneg(v)) throw ConfigError("DLCM parameters must be finite and nonnegative");
  if (!std::isfinite(p.p_ext)) throw ConfigError("p_ext must be finite");
  if (p.kappa_death > p.kappa_prol)
    throw ConfigError("kappa_death must not exceed kappa_prol");
  if (!(p.f_min >= 0.0 && p.f_min <= 1.0)) throw ConfigError("f_min must lie in [0, 1]");
  if (!(p.curvature_smoothing >= 0.0)) throw ConfigError("curvature_smoothing must be >= 0");
}

double deg_rate(double mu_death, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (!nonneg(mu_death)) throw ConfigError("mu_death must be nonnegative");
  return mu_death / (2.0 * std::log(1.0 / delta));
}

State disk(const Grid& grid, double radius, int k, double eps, double necrotic_radius) {
  if (!(radius > 0.0) || !(radius + std::abs(eps) < 1.0))
    throw ConfigError("initial radius must satisfy 0 < r and r + |eps| < 1");
  if (k < 0) throw ConfigError("perturbation mode must be nonnegative");
  if (!(necrotic_radius >= 0.0)) throw ConfigError("necrotic radius must be nonnegative");
  State s;
  s.grid = grid;
  s.u.assign(grid.size(), 0);
  for (std::size_t v = 0; v < grid.size(); ++v) {
    const Point c = grid.center(static_cast<int>(v));
    const double r = std::hypot(c.x, c.y);
    const double th = std::atan2(c.y, c.x);
    if (r <= radius + eps * std::cos(k * th)) s.u[v] = r < necrotic_radius ? -1 : 1;
  }
  return s;
}

long cell_count(const State& s) {
  long n = 0;
  for (auto u : s.u) n += u == -1 ? 1 : u;
  return n;
}

void check_state(const State& s) {
  if (s.u.size() != s.grid.size()) throw ConsistencyError("occupancy size does not match grid");
  for (auto u : s.u)
    if (u < -1 || u > 2) throw ConsistencyError("occupancy outside {-1, 0, 1, 2}");
}

Geometry pressure_geometry(const State& s, const Params& p) {
  const Grid& grid = s.grid;
  const auto ext = exterior_component(s);
  Geometry g;
  g.domain.assign(grid.size(), 0);
  g.pinned_mask.assign(grid.size(), 0);
  for (std::size_t v = 0; v < grid.size(); ++v) g.domain[v] = !ext[v];
  for (std::size_t v = 0; v < grid.size(); ++v) {
    if (!ext[v]) continue;
    for (int w : grid.neighbors(static_cast<int>(v))) {
      if (w >= 0 && g.domain[w]) {
        g.pinned_mask[v] = 1;
        g.pinned.push_back(static_cast<int>(v));
        break;
      }
    }
  }
  g.pinned_value.assign(g.pinned.size(), p.p_ext);
  if (p.sigma > 0.0 && !g.pinned.empty()) {
    std::vector<Contour> kept;
    for (auto& c : filter_contours(extract_contours(domain_indicator(grid, g.domain), 0.5),
                                   p.f_min)) {
      try {
        kept.push_back(with_curvature(smooth_contour(std::move(c), p.curvature_smoothing * grid.h())));
      } catch (const GeometryError&) {
        // too small to carry a curvature
      }
    }
    const double reach = 2.0 * grid.h();
    for (std::size_t k = 0; k < g.pinned.size(); ++k) {
      const Point x = grid.center(g.pinned[k]);
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
      g.pinned_value[k] = p.p_ext + p.sigma * C;
    }
  }
  return g;
}

struct FieldSolver::Impl {
  Grid grid;
  Params params;
  std::unique_ptr<LaplaceFactorization> oxygen_op;  // built on first use
  std::vector<std::int8_t> oxygen_key;
  Field oxygen;
  bool oxygen_valid = false;

  std::unique_ptr<LaplaceFactorization> pressure_op;
  std::vector<std::uint8_t> pressure_domain;
  std::vector<int> pressure_pinned;
  Field pressure;
  int factorizations = 0;

  static LaplaceOperator oxygen_operator(const Grid& grid) {
    LaplaceOperator op{grid, {}, {}, {}, {}};
    for (std::size_t v = 0; v < grid.size(); ++v) {
      const Point c = grid.center(static_cast<int>(v));
      if (std::hypot(c.x, c.y) >= 1.0) op.dirichlet.push_back({static_cast<int>(v), 1.0});
    }
    return op;
  }

  Impl(const Grid& g, const Params& p)
      : grid(g), params(p), oxygen(g, 1.0), pressure(g, p.p_ext) {}
};

FieldSolver::FieldSolver(const Grid& grid, const Params& p) {
  validate(p);
  impl_ = std::make_unique<Impl>(grid, p);
}

FieldSolver::~FieldSolver() = default;
FieldSolver::FieldSolver(FieldSolver&&) noexcept = default;
FieldSolver& FieldSolver::operator=(FieldSolver&&) noexcept = default;

int FieldSolver::pressure_factorizations() const noexcept { return impl_->factorizations; }

const Field& FieldSolver::oxygen(const State& s) {
  Impl& m = *impl_;
  if (!(s.grid == m.grid)) throw ConfigError("state lives on a different grid");
  std::vector<std::int8_t> key(s.u.size());
  for (std::size_t v = 0; v < key.size(); ++v) key[v] = std::max<std::int8_t>(s.u[v], 0);
  if (m.oxygen_valid && key == m.oxygen_key) return m.oxygen;
  Field src(m.grid, 0.0);
  for (std::size_t v = 0; v < key.size(); ++v) src[v] = -m.params.lambda * key[v];
  if (!m.oxygen_op) m.oxygen_op = std::make_unique<LaplaceFactorization>(Impl::oxygen_operator(m.grid));
  m.oxygen = m.oxygen_op->solve(src, {}, 1.0);
  m.oxygen_key = std::move(key);
  m.oxygen_valid = true;
  return m.oxygen;
}

const Field& FieldSolver::pressure(const State& s, const Geometry& g) {
  Impl& m = *impl_;
  if (!(s.grid == m.grid)) throw ConfigError("state lives on a different grid");
  if (g.pinned.empty()) throw InfeasibleState("pressure solve on an empty tumor");
  if (!m.pressure_op || g.domain != m.pressure_domain || g.pinned != m.pressure_pinned) {
    LaplaceOperator op{m.grid, {}, {}, {}, {}};
    op.domain = g.domain;
    for (std::size_t k = 0; k < g.pinned.size(); ++k) {
      op.domain[g.pinned[k]] = 1;
      op.dirichlet.push_back({g.pinned[k], g.pinned_value[k]});
    }
    m.pressure_op = std::make_unique<LaplaceFactorization>(std::move(op));
    m.pressure_domain = g.domain;
    m.pressure_pinned = g.pinned;
    ++m.factorizations;
  }
  Field src(m.grid, 0.0);
  for (std::size_t v = 0; v < s.u.size(); ++v) {
    if (!g.domain[v]) continue;
    if (s.u[v] == 2) src[v] = m.params.mu_prol;
    else if (s.u[v] == -1) src[v] = -m.params.mu_death;
  }
  m.pressure = m.pressure_op->solve(src, g.pinned_value, m.params.p_ext);
  if (!m.pressure.all_finite()) throw NumericalError("non-finite pressure");
  return m.pressure;
}

Field solve_pressure(const State& s, const Params& p) {
  check_state(s);
  FieldSolver solver(s.grid, p);
  return solver.pressure(s, pressure_geometry(s, p));
}

Field solve_oxygen(const State& s, const Params& p) {
  check_state(s);
  FieldSolver solver(s.grid, p);
  return solver.oxygen(s);
}

EventSet build_events(const State& s, const Field& pressure, const Field& oxygen,
                      const Params& p, const Geometry& g) {
  const Grid& grid = s.grid;
  const double ih = 1.0 / grid.h();
  EventSet out;
  auto add = [&](EventKind kind, int from, int to, double rate) {
    if (!std::isfinite(rate) || rate < 0.0)
      throw ConsistencyError("negative or non-finite event rate");
    if (rate == 0.0) return;
    out.events.push_back({kind, from, to, rate});
    out.total += rate;
  };
  for (std::size_t vi = 0; vi < s.u.size(); ++vi) {
    const int v = static_cast<int>(vi);
    const int u = s.u[v];
    if (u == 0) continue;
    bool rim = false;
    if (p.sigma > 0.0 && u == 1) {
      for (int w : grid.neighbors(v))
        if (w >= 0 && g.pinned_mask[w]) rim = true;
    }
    for (int w : grid.neighbors(v)) {
      if (w < 0) continue;
      const double dp = pressure[v] - pressure[w];
      if (!std::isfinite(dp)) throw ConsistencyError("non-finite pressure difference");
      const double drop = std::max(0.0, dp) * ih;
      const int uw = s.u[w];
      if (uw == 0) add(EventKind::migrate, v, w, p.D1 * drop);
      else if (u == 2 && uw == 1) add(EventKind::migrate, v, w, p.D2 * drop);
      else if (rim && uw == 1 && g.domain[w]) add(EventKind::inward, v, w, p.D1 * drop);
    }
    const double c = oxygen[v];
    if (u == 1 && c >= p.kappa_prol) add(EventKind::proliferate, v, -1, p.mu_prol);
    if (u >= 1 && c < p.kappa_death) add(EventKind::die, v, -1, p.mu_death);
    if (u == -1) add(EventKind::degrade, v, -1, p.mu_deg);
  }
  return out;
}

EventSet build_events(const State& s, const Field& pressure, const Field& oxygen,
                      const Params& p) {
  return build_events(s, pressure, oxygen, p, pressure_geometry(s, p));
}

void apply_event(State& s, const Event& e) {
  auto bad = [] { throw ConsistencyError("event not allowed in the current state"); };
  if (e.from < 0 || e.from >= static_cast<int>(s.u.size())) bad();
  auto& ui = s.u[e.from];
  switch (e.kind) {
    case EventKind::migrate: {
      if (e.to < 0 || e.to >= static_cast<int>(s.u.size())) bad();
      auto& uj = s.u[e.to];
      if (ui == -1 && uj == 0) {
        ui = 0;
        uj = -1;
      } else if ((ui >= 1 && uj == 0) || (ui == 2 && uj == 1)) {
        --ui;
        ++uj;
      } else {
        bad();
      }
      break;
    }
    case EventKind::inward: {
      if (e.to < 0 || e.to >= static_cast<int>(s.u.size())) bad();
      auto& uj = s.u[e.to];
      if (ui != 1 || uj != 1) bad();
      ui = 0;
      uj = 2;
      break;
    }
    case EventKind::proliferate:
      if (ui != 1) bad();
      ui = 2;
      break;
    case EventKind::die:
      if (ui < 1) bad();
      ui = -1;
      break;
    case EventKind::degrade:
      if (ui != -1) bad();
      ui = 0;
      break;
  }
}

StepResult step_event(State& s, const EventSet& events, std::mt19937_64& rng) {
  StepResult r;
  if (!(events.total > 0.0) || events.events.empty()) {
    r.deadlock = true;
    return r;
  }
  r.dt = draw_dt(events.total, rng);
  r.event = choose(events, rng);
  apply_event(s, r.event);
  s.t += r.dt;
  ++s.events;
  return r;
}

Contour tumor_contour(const State& s) {
  std::vector<std::uint8_t> filled(s.u.size(), 0);
  const auto ext = exterior_component(s);
  for (std::size_t v = 0; v < s.u.size(); ++v) filled[v] = !ext[v];
  auto contours = extract_contours(domain_indicator(s.grid, filled), 0.5);
  if (contours.empty()) throw GeometryError("tumor has no contour");
  return std::move(contours.front());
}

Sample measure(const State& s, const Field& oxygen, const Params& p) {
  Sample out;
  out.t = s.t;
  Field occupied(s.grid, 0.0);
  for (std::size_t v = 0; v < s.u.size(); ++v) {
    const int u = s.u[v];
    if (u == 0) continue;
    occupied[v] = 1.0;
    const double c = oxygen[v];
    if (u == -1 || c < p.kappa_death) ++out.n_necrotic;
    else if (c < p.kappa_prol) ++out.n_quiesc;
    else ++out.n_prolif;
  }
  out.volumes = metrics::volumes_from_counts(out.n_prolif, out.n_quiesc, out.n_necrotic,
                                             s.grid.h());
  out.com = metrics::center_of_mass(occupied);
  out.roundness = std::numeric_limits<double>::quiet_NaN();
  try {
    const Contour c = tumor_contour(s);
    if (c.size() >= 4) out.roundness = metrics::roundness(smooth_contour(c, s.grid.h())).value;
  } catch (const GeometryError&) {
  }
  return out;
}

Result simulate(State initial, const SimConfig& cfg, const Observer& observer) {
  validate(cfg.params);
  check_state(initial);
  if (!(cfg.t_end >= initial.t)) throw ConfigError("t_end precedes the initial time");
  if (cfg.field_update_stride < 1) throw ConfigError("field_update_stride must be >= 1");
  if (!(cfg.sample_dt > 0.0)) throw ConfigError("sample_dt must be positive");
  const Params& prm = cfg.params;

  Result res;
  State& s = res.final_state;
  s = std::move(initial);
  FieldSolver solver(s.grid, prm);
  std::mt19937_64 rng(cfg.seed);
  Geometry geo;
  const Field* c = nullptr;
  const Field* p = nullptr;
  double next_sample = s.t;
  long since = 0;
  auto record = [&](double t) {
    const double keep = s.t;
    s.t = t;
    Sample smp = measure(s, *c, prm);
    res.series.push_back(smp);
    if (observer) observer(s, Fields{*c, *p}, smp);
    s.t = keep;
  };
  std::vector<std::uint8_t> outside(s.grid.size(), 0);
  for (std::size_t v = 0; v < outside.size(); ++v) {
    const Point x = s.grid.center(static_cast<int>(v));
    outside[v] = std::hypot(x.x, x.y) >= 1.0;
  }
  // 0 empty lattice, 1 inside the source circle, 2 touching it
  auto extent = [&] {
    int e = 0;
    for (std::size_t v = 0; v < s.u.size(); ++v) {
      if (s.u[v] == 0) continue;
      if (outside[v]) return 2;
      e = 1;
    }
    return e;
  };

  while (true) {
    const int ext = extent();
    if (ext == 0) {
      res.end_reason = "extinct";
      break;
    }
    if (ext == 2) {
      res.end_reason = "source_reached";
      break;
    }
    if (!c || since >= cfg.field_update_stride) {
      geo = pressure_geometry(s, prm);
      c = &solver.oxygen(s);
      p = &solver.pressure(s, geo);
      since = 0;
    }
    const EventSet ev = build_events(s, *p, *c, prm, geo);
    if (ev.events.empty()) {
      while (next_sample <= cfg.t_end) {
        record(next_sample);
        next_sample += cfg.sample_dt;
      }
      s.t = cfg.t_end;
      res.end_reason = "deadlock";
      break;
    }
    const double t_next = s.t + draw_dt(ev.total, rng);
    while (next_sample <= std::min(t_next, cfg.t_end)) {
      record(next_sample);
      next_sample += cfg.sample_dt;
    }
    if (t_next > cfg.t_end) {
      s.t = cfg.t_end;
      res.end_reason = "t_end";
      break;
    }
    if (cfg.max_events > 0 && res.events >= cfg.max_events) {
      res.end_reason = "max_events";
      break;
    }
    apply_event(s, choose(ev, rng));
    s.t = t_next;
    ++s.events;
    ++res.events;
    ++since;
  }
  return res;
}

void write_snapshot_csv(std::ostream& out, const State& s, const Field& oxygen,
                        const Field& pressure) {
  tumor::write_snapshot_csv(out, s.grid, std::vector<double>(s.u.begin(), s.u.end()), oxygen,
                            pressure);
}

}  // namespace tumor::dlcm
