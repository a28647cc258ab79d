#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace tumor::radial {

/// Interface radii of a radially symmetric tumor, relative to the oxygen
/// source radius.
struct State {
  double r_n = 0.0;
  double r_q = 0.0;
  double r_p = 0.0;
};

/// Throws InfeasibleState unless 0 <= r_n <= r_q <= r_p < 1.
void validate(const State& s);

/// The reduced parameter set that fixes the radial dynamics. K values may be
/// +infinity (no oxygen consumption).
struct ReducedParams {
  double mu_death = 0.0;
  double K_prol = 0.0;
  double K_death = 0.0;
};

struct Params {
  double lambda = 1.15;
  double kappa_prol = 0.94;
  double kappa_death = 0.93;
  double mu_death = 1.35;

  double K_prol() const;
  double K_death() const;
  ReducedParams reduced() const;
};

void validate(const Params& p);
void validate(const ReducedParams& p);

/// Closed-form oxygen c(r) for a state satisfying the interface relations.
/// Inside the necrotic core it is held at its value at r_n.
double oxygen_profile(const State& s, double lambda, double r);

/// Solves the interface relations for (r_n, r_q) at tumor radius r_p.
/// Regions whose threshold is never crossed collapse: r_n = 0 when the core
/// stays above the death threshold, r_q = r_n when it stays above the
/// proliferation threshold. Throws InfeasibleState for r_p outside (0, 1).
State interfaces_from_rp(double r_p, const ReducedParams& p);

/// K_prol and K_death evaluated at a state (forward interface relations).
double K_prol_of(const State& s);
double K_death_of(const State& s);

/// Right-hand side of d(r_p^2)/dt.
double area_rate(const State& s, double mu_death);

/// One RK4 step for s = r_p^2. Throws InfeasibleState when r_p leaves (0, 1).
State step(const State& s, const ReducedParams& p, double dt);

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  bool halted = false;  // stopped early because the state left (0, 1)
  std::string halt_reason;
};

/// Integrates from a fully proliferative disk of radius r_p0, recording every
/// `record_every` steps and the final state.
Trajectory integrate(double r_p0, const ReducedParams& p, double t_end, double dt = 1e-3,
                     int record_every = 1);

/// Stationary state reached from small tumors: the first sign change of the
/// area rate in r_p, refined by bisection. Throws NoEquilibrium.
State stationary_state(const ReducedParams& p);

struct Eigenvalue {
  double value = 0.0;
  bool limit = false;  // evaluated through the analytic limit
};

/// Linearized growth rate of r_p^2 around a stationary state.
Eigenvalue radial_eigenvalue(const State& s, double mu_death);

/// Parameters that make the given radii stationary. Throws InfeasibleState
/// when r_n = 0 < r_p - r_q (no death rate can balance growth).
ReducedParams params_from_equilibrium(const State& s);

/// Writes "t,r_n,r_q,r_p,V_n,V_q,V_p".
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace tumor::radial
