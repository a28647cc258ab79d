#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace tumor {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Point a, Point b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

/// Uniform Cartesian voxel lattice. Voxel (i, j) has its center at
/// (x0 + (i + 1/2) h, y0 + (j + 1/2) h); voxels are stored row-major with i
/// running fastest. Neighbors are 4-connected.
class Grid {
 public:
  Grid() = default;
  Grid(int nx, int ny, double h, double x0, double y0);

  /// Square lattice of n x n voxels covering [-half_width, half_width]^2.
  static Grid centered(int n, double half_width);

  /// The lattice used by both simulators: [-1.1, 1.1]^2 at spacing h, so the
  /// oxygen source circle of radius 1 lies inside the domain.
  static Grid standard(double h = 0.02);

  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  double h() const noexcept { return h_; }
  double x0() const noexcept { return x0_; }
  double y0() const noexcept { return y0_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(nx_) * ny_; }

  int index(int i, int j) const noexcept { return j * nx_ + i; }
  int col(int v) const noexcept { return v % nx_; }
  int row(int v) const noexcept { return v / nx_; }
  bool contains(int i, int j) const noexcept {
    return i >= 0 && j >= 0 && i < nx_ && j < ny_;
  }

  Point center(int i, int j) const noexcept {
    return {x0_ + (i + 0.5) * h_, y0_ + (j + 0.5) * h_};
  }
  Point center(int v) const noexcept { return center(col(v), row(v)); }

  /// Voxel containing point p, or -1 when p is outside the lattice.
  int locate(Point p) const noexcept;

  /// Up to four neighbor indices in the order +x, -x, +y, -y; -1 marks a
  /// missing neighbor at the lattice edge.
  std::array<int, 4> neighbors(int v) const noexcept {
    const int i = col(v);
    const int j = row(v);
    return {i + 1 < nx_ ? v + 1 : -1, i > 0 ? v - 1 : -1,
            j + 1 < ny_ ? v + nx_ : -1, j > 0 ? v - nx_ : -1};
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int nx_ = 0;
  int ny_ = 0;
  double h_ = 0.0;
  double x0_ = 0.0;
  double y0_ = 0.0;
};

/// One scalar per voxel of a grid.
class Field {
 public:
  Field() = default;
  explicit Field(const Grid& grid, double value = 0.0)
      : grid_(grid), values_(grid.size(), value) {}
  Field(const Grid& grid, std::vector<double> values);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator[](std::size_t v) noexcept { return values_[v]; }
  double operator[](std::size_t v) const noexcept { return values_[v]; }
  double& at(int i, int j) noexcept { return values_[grid_.index(i, j)]; }
  double at(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool all_finite() const noexcept;
  double min() const noexcept;
  double max() const noexcept;
  double sum() const noexcept;

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Writes "x,y,value" rows, one per voxel in storage order.
void write_field_csv(std::ostream& out, const Field& field);

}  // namespace tumor
