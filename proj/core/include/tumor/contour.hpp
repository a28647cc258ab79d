#pragma once

#include <iosfwd>
#include <vector>

#include "tumor/grid.hpp"

namespace tumor {

/// Closed polyline; the first point is not repeated at the end.
struct Contour {
  std::vector<Point> points;
  std::vector<double> curvature;  // per point, filled by with_curvature()
  bool hole = false;              // encloses a region below the threshold

  std::size_t size() const noexcept { return points.size(); }
  double signed_area() const noexcept;
  double perimeter() const noexcept;
};

/// Marching squares over voxel centers. Values >= threshold are inside. The
/// lattice is padded with a ring of outside nodes so every contour closes;
/// crossings towards the padding sit halfway. All contours come back CCW,
/// sorted by point count, largest first.
std::vector<Contour> extract_contours(const Field& field, double threshold);

/// Keeps contours with at least f_min times the point count of the largest.
std::vector<Contour> filter_contours(std::vector<Contour> contours, double f_min);

/// Signed curvature from periodic cubic splines in arc length. Consecutive
/// duplicate points share a value. Throws GeometryError below 4 distinct
/// points.
std::vector<double> contour_curvature(const Contour& contour);

/// Gaussian filter of the points along arc length with standard deviation
/// `length` (periodic, kernel cut at 4 length). Knocks out the voxel-scale
/// staircase of marching-squares contours before differentiating; a circle
/// shrinks by the factor exp(-length^2 / 2r^2). length <= 0 returns a copy.
Contour smooth_contour(Contour contour, double length);

/// Copy of the contour with its curvature filled in.
Contour with_curvature(Contour contour);

/// Writes "s,x,y,C" with s the cumulative arc length.
void write_contour_csv(std::ostream& out, const Contour& contour);

}  // namespace tumor
