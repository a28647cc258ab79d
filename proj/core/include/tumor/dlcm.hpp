#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "tumor/grid.hpp"
#include "tumor/contour.hpp"
#include "tumor/series.hpp"

namespace tumor::dlcm {

/// Rates are per unit time; D1 and D2 convert the pressure gradient across a
/// voxel edge into a migration rate.
struct Params {
  double D1 = 25.0;
  double D2 = 25.0;
  double mu_prol = 1.0;
  double mu_death = 0.5;
  double mu_deg = 0.05;
  double kappa_prol = 0.94;
  double kappa_death = 0.93;
  double lambda = 1.0;
  double sigma = 0.0;
  double p_ext = 0.0;
  double f_min = 0.95;
  double curvature_smoothing = 2.0;  // Gaussian width along the contour, in voxels
};

void validate(const Params& p);

/// Degradation rate that lets a necrotic cell reach delta * r_n from the
/// necrotic rim before it degrades: mu_death / (2 log(1/delta)).
double deg_rate(double mu_death, double delta);

/// Occupancy per voxel: -1 necrotic, 0 empty, 1 one cell, 2 two cells.
struct State {
  Grid grid;
  std::vector<std::int8_t> u;
  double t = 0.0;
  long events = 0;
};

/// Disk of singly occupied voxels with boundary r(theta) = radius + eps cos(k
/// theta); voxels closer than necrotic_radius to the origin start necrotic.
State disk(const Grid& grid, double radius, int k = 0, double eps = 0.0,
           double necrotic_radius = 0.0);

/// Number of cells: living cells plus one per necrotic voxel.
long cell_count(const State& s);

/// Throws ConsistencyError on occupancy values outside {-1, 0, 1, 2}.
void check_state(const State& s);

/// The pressure problem for the current occupancy. The domain is every voxel
/// not in the empty component touching the lattice edge; the pinned voxels
/// are the empty voxels of that component adjacent to the domain. Pinned
/// values are p_ext + sigma C, with C the signed curvature of the nearest kept
/// contour point within 2h and 0 elsewhere.
struct Geometry {
  std::vector<std::uint8_t> domain;
  std::vector<std::uint8_t> pinned_mask;
  std::vector<int> pinned;
  std::vector<double> pinned_value;
};

Geometry pressure_geometry(const State& s, const Params& p);

/// -Lap p = s over the domain with s = mu_prol on doubly occupied and
/// -mu_death on necrotic voxels. Returns p_ext outside.
/// Throws InfeasibleState when the tumor is empty.
Field solve_pressure(const State& s, const Params& p);

/// Oxygen: -Lap c = -lambda max(u, 0), c = 1 on voxels at distance >= 1 from
/// the origin.
Field solve_oxygen(const State& s, const Params& p);

/// Keeps factorizations between calls: the oxygen operator is fixed, the
/// pressure operator is refactored only when the geometry changes.
class FieldSolver {
 public:
  FieldSolver(const Grid& grid, const Params& p);
  ~FieldSolver();
  FieldSolver(FieldSolver&&) noexcept;
  FieldSolver& operator=(FieldSolver&&) noexcept;

  const Field& oxygen(const State& s);
  const Field& pressure(const State& s, const Geometry& g);
  int pressure_factorizations() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

enum class EventKind : std::uint8_t { migrate, inward, proliferate, die, degrade };

struct Event {
  EventKind kind = EventKind::migrate;
  int from = -1;
  int to = -1;  // -1 for single-voxel events
  double rate = 0.0;
};

struct EventSet {
  std::vector<Event> events;
  double total = 0.0;
};

/// Migration i -> j with I = (p_i - p_j)+ / h: D1 I when u_i >= 1 or u_i = -1
/// and u_j = 0, D2 I when u_i = 2 and u_j = 1, and, with sigma > 0, D1 I from
/// a singly occupied voxel touching a pinned voxel into a singly occupied
/// domain voxel. Proliferation mu_prol on u = 1 with c >= kappa_prol,
/// death mu_death on u >= 1 with c < kappa_death, degradation mu_deg on u =
/// -1. Zero rates are dropped. Throws ConsistencyError on a negative or
/// non-finite rate.
EventSet build_events(const State& s, const Field& pressure, const Field& oxygen,
                      const Params& p, const Geometry& g);
EventSet build_events(const State& s, const Field& pressure, const Field& oxygen,
                      const Params& p);

/// Applies one transition. Throws ConsistencyError if it is not allowed.
void apply_event(State& s, const Event& e);

struct StepResult {
  bool deadlock = false;  // total rate was zero, nothing happened
  double dt = 0.0;
  Event event;
};

/// Direct-method SSA: dt ~ Exp(total), event chosen with probability
/// rate / total, then applied.
StepResult step_event(State& s, const EventSet& events, std::mt19937_64& rng);

/// Regional voxel counts: proliferative and quiescent living voxels by
/// oxygen, necrotic = necrotic voxels plus living voxels below kappa_death.
/// Roundness is taken on tumor_contour after a one-voxel smooth_contour.
Sample measure(const State& s, const Field& oxygen, const Params& p);

/// Main contour of the tumor domain (holes filled).
Contour tumor_contour(const State& s);

struct SimConfig {
  Params params;
  double t_end = 10.0;
  std::uint64_t seed = 1;
  int field_update_stride = 1;  // re-solve fields every n events
  double sample_dt = 0.25;
  long max_events = 0;  // 0 = unlimited
};

struct Fields {
  const Field& oxygen;
  const Field& pressure;
};

/// Called at every sample tick with the state as it was at that time.
using Observer = std::function<void(const State&, const Fields&, const Sample&)>;

struct Result {
  State final_state;
  std::vector<Sample> series;
  // "t_end", "extinct", "deadlock", "max_events", or "source_reached" once a
  // cell sits on the oxygen source circle
  std::string end_reason;
  long events = 0;
};

Result simulate(State initial, const SimConfig& cfg, const Observer& observer = {});

/// "x,y,u,c,p"
void write_snapshot_csv(std::ostream& out, const State& s, const Field& oxygen,
                        const Field& pressure);

}  // namespace tumor::dlcm
