#include "tumor/contour.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "tumor/errors.hpp"

namespace tumor {

double Contour::signed_area() const noexcept {
  double a = 0.0;
  const std::size_t n = points.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = points[i];
    const Point& q = points[(i + 1) % n];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

double Contour::perimeter() const noexcept {
  double l = 0.0;
  const std::size_t n = points.size();
  for (std::size_t i = 0; i < n; ++i) l += distance(points[i], points[(i + 1) % n]);
  return l;
}

namespace {

struct Padded {
  const Field& f;
  double thr;
  int nx, ny;  // node counts including padding
  double outside;

  double value(int I, int J) const {
    if (I == 0 || J == 0 || I == nx - 1 || J == ny - 1) return outside;
    return f.at(I - 1, J - 1);
  }
  bool virt(int I, int J) const { return I == 0 || J == 0 || I == nx - 1 || J == ny - 1; }
  Point pos(int I, int J) const { return f.grid().center(I - 1, J - 1); }

  // Edge 2*(J*nx+I) joins (I,J)-(I+1,J); edge 2*(J*nx+I)+1 joins (I,J)-(I,J+1).
  Point crossing(int e) const {
    const int base = e / 2;
    const int I = base % nx;
    const int J = base / nx;
    const int I2 = (e % 2 == 0) ? I + 1 : I;
    const int J2 = (e % 2 == 0) ? J : J + 1;
    const Point a = pos(I, J);
    const Point b = pos(I2, J2);
    double t = 0.5;
    if (!virt(I, J) && !virt(I2, J2)) {
      const double va = value(I, J);
      const double vb = value(I2, J2);
      if (vb != va) t = std::clamp((thr - va) / (vb - va), 0.0, 1.0);
    }
    return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
  }
};

}  // namespace

std::vector<Contour> extract_contours(const Field& field, double threshold) {
  if (!field.all_finite()) throw ConfigError("contour field has non-finite values");
  const Grid& g = field.grid();
  Padded pad{field, threshold, g.nx() + 2, g.ny() + 2,
             std::min(field.min(), threshold) - 1.0};
  const int NX = pad.nx;
  const int NY = pad.ny;
  auto hedge = [&](int I, int J) { return 2 * (J * NX + I); };
  auto vedge = [&](int I, int J) { return 2 * (J * NX + I) + 1; };

  std::vector<int> next(static_cast<std::size_t>(2 * NX * NY), -1);
  std::vector<int> starts;
  for (int J = 0; J + 1 < NY; ++J) {
    for (int I = 0; I + 1 < NX; ++I) {
      // Corners CCW: (I,J) (I+1,J) (I+1,J+1) (I,J+1); edge k joins corner k and k+1.
      const double v[4] = {pad.value(I, J), pad.value(I + 1, J), pad.value(I + 1, J + 1),
                           pad.value(I, J + 1)};
      bool in[4];
      int count = 0;
      for (int k = 0; k < 4; ++k) {
        in[k] = v[k] >= threshold;
        count += in[k];
      }
      if (count == 0 || count == 4) continue;
      const int edge[4] = {hedge(I, J), vedge(I + 1, J), hedge(I, J + 1), vedge(I, J)};
      const bool center_in = 0.25 * (v[0] + v[1] + v[2] + v[3]) >= threshold;
      for (int k = 0; k < 4; ++k) {
        if (!(in[k] && !in[(k + 1) % 4])) continue;
        // Pair this exit edge with an entry edge: forward when the inside
        // region is connected through the cell, backward otherwise.
        int m = k;
        for (int s = 0; s < 4; ++s) {
          m = center_in ? (m + 1) % 4 : (m + 3) % 4;
          if (!in[m] && in[(m + 1) % 4]) break;
        }
        next[edge[k]] = edge[m];
        starts.push_back(edge[k]);
      }
    }
  }

  std::vector<Contour> out;
  for (int s : starts) {
    if (next[s] < 0) continue;
    Contour c;
    int e = s;
    while (e >= 0 && next[e] >= 0) {
      c.points.push_back(pad.crossing(e));
      const int n = next[e];
      next[e] = -1;
      e = n;
      if (e == s) break;
    }
    if (c.points.size() < 3) continue;
    if (c.signed_area() < 0.0) {
      c.hole = true;
      std::reverse(c.points.begin(), c.points.end());
    }
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Contour& a, const Contour& b) { return a.size() > b.size(); });
  return out;
}

std::vector<Contour> filter_contours(std::vector<Contour> contours, double f_min) {
  if (!(f_min >= 0.0 && f_min <= 1.0)) throw ConfigError("f_min must lie in [0, 1]");
  if (contours.empty()) return contours;
  std::size_t largest = 0;
  for (const auto& c : contours) largest = std::max(largest, c.size());
  const double cut = f_min * static_cast<double>(largest);
  std::erase_if(contours, [&](const Contour& c) { return static_cast<double>(c.size()) < cut; });
  return contours;
}

namespace {

// Cyclic tridiagonal solve: a[i] x[i-1] + b[i] x[i] + c[i] x[i+1] = d[i].
std::vector<double> solve_cyclic(const std::vector<double>& a, std::vector<double> b,
                                 const std::vector<double>& c, const std::vector<double>& d) {
  const std::size_t n = b.size();
  auto thomas = [&](const std::vector<double>& bb, std::vector<double> r) {
    std::vector<double> cp(n);
    double beta = bb[0];
    r[0] /= beta;
    for (std::size_t i = 1; i < n; ++i) {
      cp[i] = c[i - 1] / beta;
      beta = bb[i] - a[i] * cp[i];
      r[i] = (r[i] - a[i] * r[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) r[i] -= cp[i + 1] * r[i + 1];
    return r;
  };
  const double alpha = c[n - 1];
  const double beta = a[0];
  const double gamma = -b[0];
  b[0] -= gamma;
  b[n - 1] -= alpha * beta / gamma;
  std::vector<double> x = thomas(b, d);
  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = alpha;
  const std::vector<double> z = thomas(b, u);
  const double fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
  for (std::size_t i = 0; i < n; ++i) x[i] -= fact * z[i];
  return x;
}

// Second derivatives of the periodic interpolating cubic through y at knot
// spacings h (h[i] between knot i and i+1, cyclically).
std::vector<double> periodic_moments(const std::vector<double>& y, const std::vector<double>& h) {
  const std::size_t n = y.size();
  std::vector<double> a(n), b(n), c(n), d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ip = (i + 1) % n;
    const std::size_t im = (i + n - 1) % n;
    a[i] = h[im];
    b[i] = 2.0 * (h[im] + h[i]);
    c[i] = h[i];
    d[i] = 6.0 * ((y[ip] - y[i]) / h[i] - (y[i] - y[im]) / h[im]);
  }
  return solve_cyclic(a, b, c, d);
}

}  // namespace

std::vector<double> contour_curvature(const Contour& contour) {
  const auto& pts = contour.points;
  const std::size_t n0 = pts.size();
  double scale = 0.0;
  for (const auto& p : pts) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
  const double eps = 1e-12 * std::max(scale, 1.0);

  std::vector<Point> q;
  std::vector<std::size_t> owner(n0, 0);
  for (std::size_t i = 0; i < n0; ++i) {
    if (q.empty() || distance(q.back(), pts[i]) > eps) q.push_back(pts[i]);
    owner[i] = q.size() - 1;
  }
  while (q.size() > 1 && distance(q.front(), q.back()) <= eps) {
    q.pop_back();
    for (auto& o : owner)
      if (o == q.size()) o = 0;
  }
  const std::size_t n = q.size();
  if (n < 4) throw GeometryError("curvature needs at least 4 distinct contour points");

  std::vector<double> h(n), x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    h[i] = distance(q[i], q[(i + 1) % n]);
    x[i] = q[i].x;
    y[i] = q[i].y;
  }
  const auto mx = periodic_moments(x, h);
  const auto my = periodic_moments(y, h);
  std::vector<double> kappa(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ip = (i + 1) % n;
    const double dx = (x[ip] - x[i]) / h[i] - h[i] * (2.0 * mx[i] + mx[ip]) / 6.0;
    const double dy = (y[ip] - y[i]) / h[i] - h[i] * (2.0 * my[i] + my[ip]) / 6.0;
    const double speed2 = dx * dx + dy * dy;
    kappa[i] = (dx * my[i] - mx[i] * dy) / (speed2 * std::sqrt(speed2));
  }
  std::vector<double> out(n0);
  for (std::size_t i = 0; i < n0; ++i) out[i] = kappa[owner[i]];
  return out;
}

Contour smooth_contour(Contour contour, double length) {
  const std::size_t n = contour.size();
  if (length <= 0.0 || n < 3) return contour;
  const auto& p = contour.points;
  std::vector<double> h(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += h[i] = distance(p[i], p[(i + 1) % n]);
  const double cut = std::min(4.0 * length, 0.5 * total);
  const double inv = 1.0 / (2.0 * length * length);
  std::vector<Point> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double wsum = 0.5 * (h[i] + h[(i + n - 1) % n]);
    Point acc{wsum * p[i].x, wsum * p[i].y};
    // forward, then backward along the curve; each side stops at the cut
    double s = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      const std::size_t j = (i + k) % n;
      s += h[(j + n - 1) % n];
      if (s > cut) break;
      const double w = std::exp(-s * s * inv) * 0.5 * (h[j] + h[(j + n - 1) % n]);
      acc.x += w * p[j].x;
      acc.y += w * p[j].y;
      wsum += w;
    }
    s = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      const std::size_t j = (i + n - k) % n;
      s += h[j];
      if (s > cut) break;
      const double w = std::exp(-s * s * inv) * 0.5 * (h[j] + h[(j + n - 1) % n]);
      acc.x += w * p[j].x;
      acc.y += w * p[j].y;
      wsum += w;
    }
    out[i] = {acc.x / wsum, acc.y / wsum};
  }
  contour.points = std::move(out);
  contour.curvature.clear();
  return contour;
}

Contour with_curvature(Contour contour) {
  contour.curvature = contour_curvature(contour);
  return contour;
}

void write_contour_csv(std::ostream& out, const Contour& contour) {
  out << "s,x,y,C\n";
  double s = 0.0;
  char buf[128];
  for (std::size_t i = 0; i < contour.size(); ++i) {
    if (i > 0) s += distance(contour.points[i - 1], contour.points[i]);
    const double c = i < contour.curvature.size() ? contour.curvature[i] : 0.0;
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g\n", s, contour.points[i].x,
                  contour.points[i].y, c);
    out << buf;
  }
}

}  // namespace tumor
