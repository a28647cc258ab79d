#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "tumor/dlcm.hpp"
#include "tumor/laplace.hpp"
#include "tumor/pde.hpp"
#include "tumor/radial.hpp"
#include "tumor/stability.hpp"

using namespace tumor;

namespace {

// Oxygen-type problem on the standard lattice: c = 1 on the source ring,
// uniform sink in a disk of radius 0.3.
struct OxygenProblem {
  Grid grid;
  Field source;
  std::vector<DirichletValue> ring;

  explicit OxygenProblem(double h) : grid(Grid::standard(h)), source(grid, 0.0) {
    for (std::size_t v = 0; v < grid.size(); ++v) {
      const Point x = grid.center(static_cast<int>(v));
      const double r = std::hypot(x.x, x.y);
      if (r >= 1.0) ring.push_back({static_cast<int>(v), 1.0});
      else if (r <= 0.3) source[v] = -1.15;
    }
  }
};

void BM_laplace_pcg(benchmark::State& state) {
  const OxygenProblem p(2.2 / static_cast<double>(state.range(0)));
  for (auto _ : state) {
    Field c = solve_laplace(p.grid, p.source, p.ring, {});
    benchmark::DoNotOptimize(c[0]);
  }
  state.SetLabel("n=" + std::to_string(p.grid.size()));
}

void BM_laplace_factor(benchmark::State& state) {
  const OxygenProblem p(2.2 / static_cast<double>(state.range(0)));
  for (auto _ : state) {
    LaplaceFactorization f(LaplaceOperator{p.grid, {}, p.ring, {}, {}});
    Field c = f.solve(p.source);
    benchmark::DoNotOptimize(c[0]);
  }
}

void BM_laplace_factored_solve(benchmark::State& state) {
  const OxygenProblem p(2.2 / static_cast<double>(state.range(0)));
  const LaplaceFactorization f(LaplaceOperator{p.grid, {}, p.ring, {}, {}});
  for (auto _ : state) {
    Field c = f.solve(p.source);
    benchmark::DoNotOptimize(c[0]);
  }
}

BENCHMARK(BM_laplace_pcg)->Arg(55)->Arg(110)->Arg(220)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_laplace_factor)->Arg(55)->Arg(110)->Arg(220)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_laplace_factored_solve)->Arg(55)->Arg(110)->Arg(220)->Unit(benchmark::kMillisecond);

// One full lattice event (fields, rates, SSA step) on a tumor of radius 0.2.
void BM_dlcm_event(benchmark::State& state) {
  dlcm::Params p;
  p.sigma = static_cast<double>(state.range(0)) * 1e-4;
  const Grid grid = Grid::standard();
  dlcm::State s = dlcm::disk(grid, 0.2, 0, 0.0, 0.08);
  dlcm::FieldSolver solver(grid, p);
  std::mt19937_64 rng(1);
  for (auto _ : state) {
    const dlcm::Geometry g = dlcm::pressure_geometry(s, p);
    const Field& c = solver.oxygen(s);
    const Field& pr = solver.pressure(s, g);
    const dlcm::EventSet ev = dlcm::build_events(s, pr, c, p, g);
    const dlcm::StepResult r = dlcm::step_event(s, ev, rng);
    if (r.deadlock) state.SkipWithError("deadlock");
  }
}
BENCHMARK(BM_dlcm_event)->Arg(0)->Arg(10)->Unit(benchmark::kMicrosecond);

// One PDE time step (oxygen, regions, pressure, flux, advection).
void BM_pde_step(benchmark::State& state) {
  pde::Params p;
  p.sigma = 3.2e-3;
  pde::State s = pde::disk(Grid::standard(), 0.25);
  std::uint64_t step = 0;
  for (auto _ : state) {
    s.c = pde::solve_oxygen(s.rho, p, &s.c);
    const auto reg = pde::classify_regions(s.c, s.rho, p);
    const pde::Boundary b = pde::tumor_boundary(s.rho, p);
    s.p = pde::solve_pressure(s.rho, reg, b, p);
    const Field F = pde::flux_divergence(s.rho, s.p, pde::growth_term(s.rho, reg, p), b.tumor);
    pde::advect(s.rho, F, p.omega, 1, step++, s.rho.grid().h());
  }
}
BENCHMARK(BM_pde_step)->Unit(benchmark::kMillisecond);

// Dispersion relation over k = 1..64 at the standard stationary state.
void BM_dispersion(benchmark::State& state) {
  stability::Input in;
  in.state = radial::stationary_state(radial::Params{}.reduced());
  in.mu_death = 1.35;
  in.sigma = 5e-4;
  for (auto _ : state) {
    double sum = 0.0;
    for (int k = 1; k <= 64; ++k) sum += stability::dispersion(in, k).Lambda;
    benchmark::DoNotOptimize(sum);
  }
}
BENCHMARK(BM_dispersion);

void BM_radial_stationary(benchmark::State& state) {
  const radial::ReducedParams red = radial::Params{}.reduced();
  for (auto _ : state) benchmark::DoNotOptimize(radial::stationary_state(red).r_p);
}
BENCHMARK(BM_radial_stationary);

}  // namespace

BENCHMARK_MAIN();
