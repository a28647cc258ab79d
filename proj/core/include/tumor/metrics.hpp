#pragma once

#include <iosfwd>
#include <vector>

#include "tumor/contour.hpp"
#include "tumor/grid.hpp"

namespace tumor::metrics {

struct Roundness {
  double value = 0.0;
  bool self_intersecting = false;
};

/// 4 pi A / P^2 with shoelace area and polyline perimeter.
Roundness roundness(const Contour& contour);

/// Region areas in the radial convention: V_p is the whole tumor, V_q the
/// quiescent and necrotic part, V_n the necrotic core.
struct Volumes {
  double V_p = 0.0;
  double V_q = 0.0;
  double V_n = 0.0;
};

Volumes volumes_from_counts(long n_prolif, long n_quiesc, long n_necrotic, double h);

struct Modes {
  std::vector<double> amplitude;  // a_1 .. a_kmax
  double mean_radius = 0.0;
  bool star_shaped = true;  // false when some ray met the contour more than once
};

/// Fourier magnitudes |2/N sum r(theta_j) e^{-ik theta_j}| of the radius
/// function sampled on `samples` rays from `center` (outermost crossing).
Modes boundary_modes(const Contour& contour, Point center, int k_max, int samples = 512);

/// Amplitudes of modes 1..k_max over time; amplitude[k-1][i] at times[i].
struct ModeSeries {
  std::vector<double> times;
  std::vector<std::vector<double>> amplitude;
};

struct GrowthFit {
  double rate = 0.0;
  double stderr_ = 0.0;
  int samples = 0;
  bool window_shrunk = false;
};

/// Least-squares slope of log a(t) with its standard error. Stops at the
/// first nonpositive amplitude (flagged). Throws ConfigError with fewer than
/// 5 usable samples.
GrowthFit fit_growth(const std::vector<double>& times, const std::vector<double>& amplitude);

/// Index one past the end of the linear-regime window: from the first sample
/// until a doubles or t advances by `max_span`, whichever comes first.
std::size_t doubling_window(const std::vector<double>& times, const std::vector<double>& amplitude,
                            double max_span = 5.0);

std::vector<GrowthFit> fit_mode_growth(const ModeSeries& series, double max_span = 5.0);

/// Weighted mean voxel center; weights <= 0 are ignored.
Point center_of_mass(const Field& weights);

/// Writes "t,k,a_k".
void write_mode_series_csv(std::ostream& out, const ModeSeries& series);

struct ModeComparison {
  int k = 0;
  double Lambda_est = 0.0;
  double stderr_ = 0.0;
  double Lambda_analytic = 0.0;
};

/// Writes "k,Lambda_est,stderr,Lambda_analytic".
void write_mode_comparison_csv(std::ostream& out, const std::vector<ModeComparison>& rows);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace tumor::metrics
