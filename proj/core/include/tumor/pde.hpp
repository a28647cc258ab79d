#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tumor/grid.hpp"
#include "tumor/series.hpp"

namespace tumor::pde {

/// Oxygen threshold below which tumor density stops consuming.
enum class Cutoff { kappa_death, kappa_prol };

/// active_set solves the complementarity form of the switched consumption
/// (consume where c > cutoff, c held at the cutoff elsewhere) exactly;
/// pseudo_time runs the implicit sweep with the switch lagged by one sweep.
enum class OxygenMethod { active_set, pseudo_time };

struct Params {
  double mu_prol = 1.0;
  double mu_death = 1.35;
  double lambda = 1.15;
  double kappa_prol = 0.94;
  double kappa_death = 0.93;
  double sigma = 0.0;
  double rho_thresh = 0.9;
  double omega = 0.025;
  double p_ext = 0.0;
  double f_min = 0.95;
  double curvature_smoothing = 2.0;  // Gaussian width along the contour, in voxels
  Cutoff cutoff = Cutoff::kappa_death;
  OxygenMethod oxygen_method = OxygenMethod::active_set;
  double dtau = 1.0;
  double oxygen_tol = 1e-8;
  int oxygen_max_iter = 10000;
};

void validate(const Params& p);

enum Region : std::uint8_t { exterior = 0, proliferative = 1, quiescent = 2, necrotic = 3 };

/// Tumor = {rho >= rho_thresh}; inside it proliferative where c >=
/// kappa_prol, necrotic where c < kappa_death (up to 1e-9, so voxels held at
/// the cutoff count), quiescent in between.
std::vector<std::uint8_t> classify_regions(const Field& c, const Field& rho, const Params& p);

/// Boundary volumes: non-tumor voxels 4-adjacent to the tumor, pinned to
/// p_ext + sigma C with C from the nearest point of a kept rho_thresh contour
/// within 2h (0 otherwise).
struct Boundary {
  std::vector<std::uint8_t> tumor;
  std::vector<int> pinned;
  std::vector<double> pinned_value;
};

Boundary tumor_boundary(const Field& rho, const Params& p);

/// -Lap p = mu_prol on proliferative, -mu_death on necrotic, 0 on quiescent
/// voxels of the tumor, Dirichlet on the boundary volumes, p_ext elsewhere.
/// Throws InfeasibleState on an empty tumor.
Field solve_pressure(const Field& rho, const std::vector<std::uint8_t>& regions,
                     const Params& p);
Field solve_pressure(const Field& rho, const std::vector<std::uint8_t>& regions,
                     const Boundary& b, const Params& p);

struct OxygenReport {
  int iterations = 0;
  double change = 0.0;  // last max-norm update
};

/// Oxygen with c = 1 on voxels at distance >= 1 from the origin and
/// consumption lambda rho on tumor voxels above the cutoff. `warm` seeds the
/// iteration. Throws NumericalError when the iteration cap is hit.
Field solve_oxygen(const Field& rho, const Params& p, const Field* warm = nullptr,
                   OxygenReport* report = nullptr);

/// Mass production rate Gamma: mu_prol rho on proliferative, -mu_death rho on
/// necrotic voxels. Voxels outside the tumor neither grow nor die, so specks
/// of density left behind by the noise stay inert.
Field growth_term(const Field& rho, const std::vector<std::uint8_t>& regions, const Params& p);

/// F_i = -(1/h^2) sum_j (p_i - p_j) R_ij + Gamma_i with the upwind donor
/// R_ij; only faces touching the tumor carry flux.
Field flux_divergence(const Field& rho, const Field& pressure, const Field& gamma,
                      const std::vector<std::uint8_t>& tumor);

struct StepReport {
  double dt = 0.0;
  double max_flux = 0.0;
  double clamped_mass = 0.0;  // mass removed by clamping negative densities
};

/// rho += dt F + omega |dt F|^(1/2) N(0,1) with dt = min(h, 0.1 / max|F|).
/// Noise comes from a counter-based stream keyed by (seed, step, voxel).
/// Throws NumericalError on non-finite F.
StepReport advect(Field& rho, const Field& flux, double omega, std::uint64_t seed,
                  std::uint64_t step, double dt_max);

/// Deterministic standard normal for (seed, step, voxel).
double gaussian(std::uint64_t seed, std::uint64_t step, std::uint64_t voxel);

struct State {
  Field rho;
  Field c;
  Field p;
  double t = 0.0;
  std::uint64_t step = 0;
};

/// rho = 1 on voxels with r <= radius + eps cos(k theta), 0 elsewhere.
State disk(const Grid& grid, double radius, int k = 0, double eps = 0.0);

/// Region counts and volumes, rho-weighted center of mass, and roundness of
/// the main rho_thresh contour after a one-voxel smooth_contour (which takes
/// the lattice staircase out of the perimeter).
Sample measure(const State& s, const Params& p);

struct SimConfig {
  Params params;
  double t_end = 10.0;
  std::uint64_t seed = 1;
  double sample_dt = 0.25;
};

struct Fields {
  const Field& oxygen;
  const Field& pressure;
};

using Observer = std::function<void(const State&, const Sample&)>;

struct Result {
  State final_state;
  std::vector<Sample> series;
  std::string end_reason;  // "t_end", "extinct" or "source_reached"
  double clamped_mass = 0.0;
  std::uint64_t steps = 0;
};

/// Loop {oxygen, classify, pressure, advect} until t_end. A sample is taken
/// at the first step at or after each multiple of sample_dt. Stops early when
/// the tumor vanishes or touches the oxygen source circle (the model assumes
/// it stays inside).
Result simulate(State initial, const SimConfig& cfg, const Observer& observer = {});

struct EffectiveParams {
  double mu_prol = 0.0;
  double mu_death = 0.0;
  double lambda = 0.0;
  int exp_samples = 0;
  int stationary_samples = 0;
};

/// Effective PDE rates from a stochastic trajectory. mu_prol: twice the
/// least-squares slope of log r_p over the leading samples without quiescent
/// or necrotic voxels. mu_death = mu_death_dlcm / mu_prol. lambda: mean of
/// 4 (1 - kappa_prol) / K_prol(r_n, r_q, r_p) over the last quarter of the
/// samples that have a quiescent region. Throws ConfigError when either
/// window has fewer than 5 samples.
EffectiveParams fit_effective_params(const std::vector<Sample>& series, double mu_death_dlcm,
                                     double kappa_prol);

}  // namespace tumor::pde
