#include "tumor/laplace.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "tumor/errors.hpp"

namespace tumor {
namespace {

// Free voxels are numbered 0..n-1; row i couples to free neighbors through
// `nbr` and to pinned neighbors through the right-hand side.
struct Assembly {
  Grid grid;
  std::vector<int> free_index;  // voxel -> row, -1 if pinned or outside
  std::vector<int> voxel_of;    // row -> voxel
  std::vector<int> pinned_slot; // voxel -> dirichlet entry, -1 otherwise
  std::vector<double> diag;
  std::vector<std::array<int, 4>> nbr;          // free neighbor rows or -1
  std::vector<std::array<int, 4>> pinned_nbr;   // dirichlet slots or -1
  std::vector<double> pinned_values;
  double inv_h2 = 0.0;
};

Assembly assemble(const Grid& grid, std::span<const std::uint8_t> domain,
                  std::span<const DirichletValue> dirichlet,
                  std::span<const Face> neumann_zero,
                  std::span<const double> shift) {
  const int n = static_cast<int>(grid.size());
  if (!domain.empty() && domain.size() != grid.size())
    throw ConfigError("domain mask size does not match grid");
  if (!shift.empty() && shift.size() != grid.size())
    throw ConfigError("shift size does not match grid");
  auto inside = [&](int v) { return v >= 0 && (domain.empty() || domain[v] != 0); };

  Assembly a;
  a.grid = grid;
  a.inv_h2 = 1.0 / (grid.h() * grid.h());
  a.pinned_slot.assign(n, -1);
  a.pinned_values.reserve(dirichlet.size());
  for (std::size_t s = 0; s < dirichlet.size(); ++s) {
    const auto& d = dirichlet[s];
    if (d.voxel < 0 || d.voxel >= n) throw ConfigError("Dirichlet voxel out of range");
    if (!inside(d.voxel)) throw ConfigError("Dirichlet voxel outside the domain");
    if (!std::isfinite(d.value)) throw ConfigError("non-finite Dirichlet value");
    a.pinned_slot[d.voxel] = static_cast<int>(s);
    a.pinned_values.push_back(d.value);
  }

  std::vector<std::uint8_t> blocked(grid.size() * 4, 0);
  for (const Face& f : neumann_zero) {
    if (f.voxel < 0 || f.voxel >= n || f.dir < 0 || f.dir > 3)
      throw ConfigError("Neumann face out of range");
    blocked[f.voxel * 4 + f.dir] = 1;
    const int w = grid.neighbors(f.voxel)[f.dir];
    if (w >= 0) blocked[w * 4 + (f.dir ^ 1)] = 1;
  }

  a.free_index.assign(n, -1);
  for (int v = 0; v < n; ++v) {
    if (inside(v) && a.pinned_slot[v] < 0) {
      a.free_index[v] = static_cast<int>(a.voxel_of.size());
      a.voxel_of.push_back(v);
    }
  }
  const std::size_t m = a.voxel_of.size();
  a.diag.assign(m, 0.0);
  a.nbr.assign(m, {-1, -1, -1, -1});
  a.pinned_nbr.assign(m, {-1, -1, -1, -1});
  for (std::size_t r = 0; r < m; ++r) {
    const int v = a.voxel_of[r];
    const auto nb = grid.neighbors(v);
    double d = shift.empty() ? 0.0 : shift[v];
    for (int k = 0; k < 4; ++k) {
      const int w = nb[k];
      if (!inside(w) || blocked[v * 4 + k]) continue;
      d += a.inv_h2;
      if (a.pinned_slot[w] >= 0)
        a.pinned_nbr[r][k] = a.pinned_slot[w];
      else
        a.nbr[r][k] = a.free_index[w];
    }
    a.diag[r] = d;
  }

  // Every connected part of the free voxels needs an anchor.
  std::vector<int> comp(m, -1);
  std::vector<int> stack;
  for (std::size_t s = 0; s < m; ++s) {
    if (comp[s] >= 0) continue;
    bool anchored = false;
    comp[s] = 1;
    stack.assign(1, static_cast<int>(s));
    while (!stack.empty()) {
      const int r = stack.back();
      stack.pop_back();
      if (!shift.empty() && shift[a.voxel_of[r]] > 0.0) anchored = true;
      for (int k = 0; k < 4; ++k) {
        if (a.pinned_nbr[r][k] >= 0) anchored = true;
        const int q = a.nbr[r][k];
        if (q >= 0 && comp[q] < 0) {
          comp[q] = 1;
          stack.push_back(q);
        }
      }
    }
    if (!anchored)
      throw ConfigError("singular Laplace system: a connected region has no Dirichlet voxel");
  }
  return a;
}

std::vector<double> reduced_rhs(const Assembly& a, const Field& source,
                                std::span<const double> pinned) {
  std::vector<double> b(a.voxel_of.size());
  for (std::size_t r = 0; r < b.size(); ++r) {
    double s = source[a.voxel_of[r]];
    for (int k = 0; k < 4; ++k)
      if (a.pinned_nbr[r][k] >= 0) s += a.inv_h2 * pinned[a.pinned_nbr[r][k]];
    b[r] = s;
  }
  return b;
}

void apply(const Assembly& a, const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t r = 0; r < x.size(); ++r) {
    double s = a.diag[r] * x[r];
    for (int q : a.nbr[r])
      if (q >= 0) s -= a.inv_h2 * x[q];
    y[r] = s;
  }
}

Field scatter(const Assembly& a, std::span<const double> x,
              std::span<const double> pinned, double fill) {
  Field out(a.grid, fill);
  for (std::size_t r = 0; r < a.voxel_of.size(); ++r) out[a.voxel_of[r]] = x[r];
  for (std::size_t v = 0; v < out.size(); ++v)
    if (a.pinned_slot[v] >= 0) out[v] = pinned[a.pinned_slot[v]];
  return out;
}

Eigen::SparseMatrix<double> sparse_matrix(const Assembly& a) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(a.diag.size() * 5);
  for (std::size_t r = 0; r < a.diag.size(); ++r) {
    t.emplace_back(r, r, a.diag[r]);
    for (int q : a.nbr[r])
      if (q >= 0) t.emplace_back(r, q, -a.inv_h2);
  }
  const auto m = static_cast<Eigen::Index>(a.diag.size());
  Eigen::SparseMatrix<double> A(m, m);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

void check_source(const Grid& grid, const Field& source) {
  if (!(source.grid() == grid)) throw ConfigError("source lives on a different grid");
  if (!source.all_finite()) throw ConfigError("non-finite source");
}

}  // namespace

Field solve_laplace(const Grid& grid, const Field& source,
                    std::span<const DirichletValue> dirichlet,
                    std::span<const Face> neumann_zero, const SolveOptions& options,
                    SolveReport* report) {
  check_source(grid, source);
  const Assembly a = assemble(grid, options.domain, dirichlet, neumann_zero, options.shift);
  const std::size_t m = a.voxel_of.size();
  const std::vector<double> b = reduced_rhs(a, source, a.pinned_values);

  std::vector<double> x(m, 0.0);
  if (options.initial_guess) {
    for (std::size_t r = 0; r < m; ++r) x[r] = (*options.initial_guess)[a.voxel_of[r]];
  }

  double bnorm = 0.0;
  for (double v : b) bnorm += v * v;
  bnorm = std::sqrt(bnorm);
  SolveReport rep;
  if (m > 0 && bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
  } else if (m > 0) {
    std::vector<double> r(m), z(m), p(m), q(m);
    apply(a, x, q);
    for (std::size_t i = 0; i < m; ++i) r[i] = b[i] - q[i];
    auto dot = [](const std::vector<double>& u, const std::vector<double>& v) {
      double s = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
      return s;
    };
    const double tol = options.rel_tol * bnorm;
    const int cap = options.max_iter > 0 ? options.max_iter : 10 * static_cast<int>(grid.size());
    double rnorm = std::sqrt(dot(r, r));
    for (std::size_t i = 0; i < m; ++i) z[i] = r[i] / a.diag[i];
    p = z;
    double rz = dot(r, z);
    int it = 0;
    while (rnorm > tol) {
      if (it >= cap)
        throw NumericalError("Laplace solve did not converge in " + std::to_string(cap) +
                                 " iterations",
                             rnorm / bnorm);
      apply(a, p, q);
      const double alpha = rz / dot(p, q);
      for (std::size_t i = 0; i < m; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      rnorm = std::sqrt(dot(r, r));
      for (std::size_t i = 0; i < m; ++i) z[i] = r[i] / a.diag[i];
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < m; ++i) p[i] = z[i] + beta * p[i];
      ++it;
      if (!std::isfinite(rnorm)) throw NumericalError("Laplace solve diverged", rnorm);
    }
    rep.iterations = it;
    rep.residual = rnorm / bnorm;
  }
  if (report) *report = rep;
  return scatter(a, x, a.pinned_values, options.fill_value);
}

struct LaplaceFactorization::Impl {
  LaplaceOperator op;
  Assembly a;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

LaplaceFactorization::LaplaceFactorization(LaplaceOperator op) : impl_(std::make_unique<Impl>()) {
  impl_->op = std::move(op);
  const auto& o = impl_->op;
  impl_->a = assemble(o.grid, o.domain, o.dirichlet, o.neumann_zero, o.shift);
  if (!impl_->a.diag.empty()) {
    impl_->ldlt.compute(sparse_matrix(impl_->a));
    if (impl_->ldlt.info() != Eigen::Success)
      throw NumericalError("sparse factorization failed");
  }
}

LaplaceFactorization::~LaplaceFactorization() = default;
LaplaceFactorization::LaplaceFactorization(LaplaceFactorization&&) noexcept = default;
LaplaceFactorization& LaplaceFactorization::operator=(LaplaceFactorization&&) noexcept = default;

const LaplaceOperator& LaplaceFactorization::op() const noexcept { return impl_->op; }

Field LaplaceFactorization::solve(const Field& source, std::span<const double> pinned,
                                  double fill_value) const {
  const Assembly& a = impl_->a;
  check_source(a.grid, source);
  std::span<const double> vals = a.pinned_values;
  if (!pinned.empty()) {
    if (pinned.size() != a.pinned_values.size())
      throw ConfigError("pinned value count does not match the operator");
    vals = pinned;
  }
  const std::vector<double> b = reduced_rhs(a, source, vals);
  std::vector<double> x;
  if (!b.empty()) {
    Eigen::Map<const Eigen::VectorXd> bv(b.data(), static_cast<Eigen::Index>(b.size()));
    Eigen::VectorXd xv = impl_->ldlt.solve(bv);
    x.assign(xv.data(), xv.data() + xv.size());
  }
  return scatter(a, x, vals, fill_value);
}

}  // namespace tumor
