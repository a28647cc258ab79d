#include "tumor/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>

#include "tumor/errors.hpp"

namespace tumor::metrics {
namespace {

double cross(Point o, Point a, Point b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool segments_cross(Point a, Point b, Point c, Point d) {
  const double d1 = cross(c, d, a);
  const double d2 = cross(c, d, b);
  const double d3 = cross(a, b, c);
  const double d4 = cross(a, b, d);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
         d4 != 0;
}

}  // namespace

Roundness roundness(const Contour& contour) {
  const std::size_t n = contour.size();
  if (n < 4) throw GeometryError("roundness needs at least 4 contour points");
  const double area = std::abs(contour.signed_area());
  const double per = contour.perimeter();
  if (!(per > 0.0)) throw GeometryError("contour has zero perimeter");
  Roundness out;
  out.value = 4.0 * std::numbers::pi * area / (per * per);
  const auto& p = contour.points;
  for (std::size_t i = 0; i < n && !out.self_intersecting; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_cross(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n])) {
        out.self_intersecting = true;
        break;
      }
    }
  }
  return out;
}

Volumes volumes_from_counts(long n_prolif, long n_quiesc, long n_necrotic, double h) {
  const double a = h * h;
  return {a * static_cast<double>(n_prolif + n_quiesc + n_necrotic),
          a * static_cast<double>(n_quiesc + n_necrotic), a * static_cast<double>(n_necrotic)};
}

Modes boundary_modes(const Contour& contour, Point center, int k_max, int samples) {
  if (contour.size() < 3) throw GeometryError("boundary modes need a closed contour");
  if (k_max < 1 || samples < 2 * k_max + 1) throw ConfigError("invalid mode count");
  const auto& p = contour.points;
  const std::size_t n = p.size();
  std::vector<double> r(samples, 0.0);
  Modes out;
  for (int j = 0; j < samples; ++j) {
    const double th = 2.0 * std::numbers::pi * j / samples;
    const double dx = std::cos(th);
    const double dy = std::sin(th);
    double best = -1.0;
    std::vector<double> hits;
    for (std::size_t i = 0; i < n; ++i) {
      const Point a{p[i].x - center.x, p[i].y - center.y};
      const Point b{p[(i + 1) % n].x - center.x, p[(i + 1) % n].y - center.y};
      const double ex = b.x - a.x;
      const double ey = b.y - a.y;
      const double den = dx * ey - dy * ex;
      if (den == 0.0) continue;
      const double t = (a.x * ey - a.y * ex) / den;  // distance along the ray
      const double u = (a.x * dy - a.y * dx) / den;  // position on the segment
      if (t > 0.0 && u >= -1e-12 && u <= 1.0 + 1e-12) {
        hits.push_back(t);
        best = std::max(best, t);
      }
    }
    // A ray through a vertex meets both adjacent segments at the same point.
    std::sort(hits.begin(), hits.end());
    const auto distinct =
        std::unique(hits.begin(), hits.end(),
                    [&](double a, double b) { return b - a <= 1e-9 * std::max(1.0, b); }) -
        hits.begin();
    if (distinct != 1) out.star_shaped = false;
    r[j] = std::max(best, 0.0);
  }
  out.mean_radius = std::accumulate(r.begin(), r.end(), 0.0) / samples;
  out.amplitude.resize(k_max);
  for (int k = 1; k <= k_max; ++k) {
    std::complex<double> s = 0.0;
    for (int j = 0; j < samples; ++j)
      s += r[j] * std::polar(1.0, -2.0 * std::numbers::pi * k * j / samples);
    out.amplitude[k - 1] = std::abs(2.0 / samples * s);
  }
  return out;
}

GrowthFit fit_growth(const std::vector<double>& times, const std::vector<double>& amplitude) {
  if (times.size() != amplitude.size()) throw ConfigError("time and amplitude lengths differ");
  GrowthFit out;
  std::size_t n = 0;
  while (n < amplitude.size() && amplitude[n] > 0.0 && std::isfinite(amplitude[n])) ++n;
  out.window_shrunk = n < amplitude.size();
  if (n < 5) throw ConfigError("growth fit needs at least 5 positive samples");
  double mt = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mt += times[i];
    my += std::log(amplitude[i]);
  }
  mt /= n;
  my /= n;
  double stt = 0.0;
  double sty = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    stt += (times[i] - mt) * (times[i] - mt);
    sty += (times[i] - mt) * (std::log(amplitude[i]) - my);
  }
  if (!(stt > 0.0)) throw ConfigError("growth fit needs distinct sample times");
  out.rate = sty / stt;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::log(amplitude[i]) - my - out.rate * (times[i] - mt);
    sse += e * e;
  }
  out.stderr_ = std::sqrt(sse / static_cast<double>(n - 2) / stt);
  out.samples = static_cast<int>(n);
  return out;
}

std::size_t doubling_window(const std::vector<double>& times,
                            const std::vector<double>& amplitude, double max_span) {
  if (times.empty()) return 0;
  std::size_t end = 1;
  while (end < times.size() && times[end] - times[0] <= max_span &&
         amplitude[end] <= 2.0 * amplitude[0])
    ++end;
  if (end < times.size() && amplitude[end] > 2.0 * amplitude[0] &&
      times[end] - times[0] <= max_span)
    ++end;  // include the sample at which the amplitude doubled
  return end;
}

std::vector<GrowthFit> fit_mode_growth(const ModeSeries& series, double max_span) {
  std::vector<GrowthFit> out;
  for (const auto& a : series.amplitude) {
    const std::size_t end = doubling_window(series.times, a, max_span);
    std::vector<double> t(series.times.begin(), series.times.begin() + end);
    std::vector<double> v(a.begin(), a.begin() + end);
    out.push_back(fit_growth(t, v));
  }
  return out;
}

Point center_of_mass(const Field& weights) {
  double sx = 0.0;
  double sy = 0.0;
  double sw = 0.0;
  for (std::size_t v = 0; v < weights.size(); ++v) {
    const double w = weights[v];
    if (!(w > 0.0)) continue;
    const Point c = weights.grid().center(static_cast<int>(v));
    sx += w * c.x;
    sy += w * c.y;
    sw += w;
  }
  if (sw == 0.0) throw GeometryError("center of mass of an empty tumor");
  return {sx / sw, sy / sw};
}

void write_mode_series_csv(std::ostream& out, const ModeSeries& series) {
  out << "t,k,a_k\n";
  char buf[96];
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    for (std::size_t k = 0; k < series.amplitude.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.10g,%zu,%.10g\n", series.times[i], k + 1,
                    series.amplitude[k][i]);
      out << buf;
    }
  }
}

void write_mode_comparison_csv(std::ostream& out, const std::vector<ModeComparison>& rows) {
  out << "k,Lambda_est,stderr,Lambda_analytic\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g\n", r.k, r.Lambda_est, r.stderr_,
                  r.Lambda_analytic);
    out << buf;
  }
}

namespace {
std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t m = i; m <= j; ++m) r[idx[m]] = avg;
    i = j + 1;
  }
  return r;
}
}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw ConfigError("spearman needs paired samples");
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace tumor::metrics
