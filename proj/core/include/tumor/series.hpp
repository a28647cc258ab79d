#pragma once

#include <iosfwd>
#include <vector>

#include "tumor/grid.hpp"
#include "tumor/metrics.hpp"

namespace tumor {

/// One row of a simulation time series: voxel counts per region, the region
/// areas, roundness of the main boundary contour and the center of mass.
struct Sample {
  double t = 0.0;
  long n_prolif = 0;
  long n_quiesc = 0;
  long n_necrotic = 0;
  metrics::Volumes volumes;
  double roundness = 0.0;  // NaN when no contour could be traced
  Point com;
};

/// "t,n_prolif,n_quiesc,n_necrotic,V_p,V_q,V_n,roundness,com_x,com_y"
void write_series_csv(std::ostream& out, const std::vector<Sample>& series);

/// Parses what write_series_csv wrote. Throws ConfigError naming the first
/// bad line or a header mismatch.
std::vector<Sample> read_series_csv(std::istream& in);

/// "x,y,u,c,p" with one row per voxel; u is the occupancy for the DLCM and
/// the density for the PDE.
void write_snapshot_csv(std::ostream& out, const Grid& grid, const std::vector<double>& u,
                        const Field& oxygen, const Field& pressure);

}  // namespace tumor
