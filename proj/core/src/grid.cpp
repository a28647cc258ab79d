#include "tumor/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "tumor/errors.hpp"

namespace tumor {

Grid::Grid(int nx, int ny, double h, double x0, double y0)
    : nx_(nx), ny_(ny), h_(h), x0_(x0), y0_(y0) {
  if (nx < 3 || ny < 3) throw ConfigError("grid needs at least 3x3 voxels");
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("grid spacing must be positive");
}

Grid Grid::centered(int n, double half_width) {
  return Grid(n, n, 2.0 * half_width / n, -half_width, -half_width);
}

Grid Grid::standard(double h) {
  const int n = static_cast<int>(std::lround(2.2 / h));
  return Grid(n, n, h, -0.5 * n * h, -0.5 * n * h);
}

int Grid::locate(Point p) const noexcept {
  const double fi = std::floor((p.x - x0_) / h_);
  const double fj = std::floor((p.y - y0_) / h_);
  if (fi < 0 || fj < 0 || fi >= nx_ || fj >= ny_) return -1;
  return index(static_cast<int>(fi), static_cast<int>(fj));
}

Field::Field(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw ConfigError("field size does not match grid");
}

bool Field::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

double Field::min() const noexcept {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double Field::max() const noexcept {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double Field::sum() const noexcept {
  return std::accumulate(values_.begin(), values_.end(), 0.0);
}

void write_field_csv(std::ostream& out, const Field& field) {
  const Grid& g = field.grid();
  out << "x,y,value\n";
  char buf[96];
  for (std::size_t v = 0; v < field.size(); ++v) {
    const Point c = g.center(static_cast<int>(v));
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", c.x, c.y, field[v]);
    out << buf;
  }
}

}  // namespace tumor
