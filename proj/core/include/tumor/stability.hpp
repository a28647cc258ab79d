#pragma once

#include <iosfwd>
#include <limits>
#include <vector>

#include "tumor/radial.hpp"

namespace tumor::stability {

inline constexpr double infinite_D = std::numeric_limits<double>::infinity();

struct Input {
  radial::State state;
  double mu_death = 0.0;
  double D_ext = infinite_D;  // relative exterior Darcy coefficient, (0, inf]
  double sigma = 0.0;
  double p_ext = 0.0;
};

void validate(const Input& in);

/// Piecewise radial pressure of the unperturbed tumor. Inside, the rim value
/// is p_ext + sigma / r_p (Laplace overpressure of a convex interface).
double radial_pressure_profile(const Input& in, double r);

/// Interface perturbation amplitudes relative to the rim amplitude.
struct PerturbationResponse {
  int k = 0;
  double zeta_q_ratio = 0.0;
  double zeta_n_ratio = 0.0;
};

PerturbationResponse perturbation_response(const radial::State& s, int k);

struct Dispersion {
  double Lambda = 0.0;
  double saffman_taylor_term = 0.0;  // (r_p'/r_p) ((1 - D)/(1 + D) k - 1)
  double inner_term = 0.0;           // <= 0
  double surface_term = 0.0;         // <= 0
};

/// Growth rate of mode k. Lambda = saffman_taylor_term + D/(1+D) +
/// inner_term + surface_term.
Dispersion dispersion(const Input& in, int k);

/// (r_p'/r_p)(k - 1): the exterior-dominated limit D_ext -> 0.
double dispersion_limit_small_Dext(const radial::State& s, double mu_death, int k);

/// r_p'/r_p.
double growth_discriminant(const radial::State& s, double mu_death);

/// r_p^3 / (k (k^2 - 1)); throws ConfigError for k < 2.
double sigma_stable(const radial::State& s, int k);

/// Lambda(1), the rate at which the tumor drifts toward the oxygen source.
double creeping_rate(const Input& in);

/// Surface tension at which Lambda(k) vanishes (Lambda is affine in sigma).
double sigma_root(const Input& in, int k);

/// Writes "k,Lambda,saffman_taylor_term,inner_term,surface_term" for k = 1..k_max.
void write_spectrum_csv(std::ostream& out, const Input& in, int k_max);

}  // namespace tumor::stability
