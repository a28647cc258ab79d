#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "tumor/grid.hpp"

namespace tumor {

struct DirichletValue {
  int voxel = 0;
  double value = 0.0;
};

/// The face of `voxel` facing neighbor slot `dir` (Grid::neighbors order).
struct Face {
  int voxel = 0;
  int dir = 0;
};

/// Discrete operator (shift - Lap_h) on a subset of the lattice. Faces at the
/// lattice edge, faces leaving the domain and the listed Neumann faces carry
/// no flux.
struct LaplaceOperator {
  Grid grid;
  std::vector<std::uint8_t> domain;  // empty = whole lattice
  std::vector<DirichletValue> dirichlet;
  std::vector<Face> neumann_zero;
  std::vector<double> shift;  // per-voxel diagonal term; empty = 0
};

struct SolveOptions {
  double rel_tol = 1e-10;
  int max_iter = 0;  // 0 means 10 * voxel count
  std::vector<std::uint8_t> domain;
  std::vector<double> shift;
  const Field* initial_guess = nullptr;
  double fill_value = 0.0;  // written outside the domain
};

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;  // relative 2-norm
};

/// Solves -Lap_h(phi) = source with 5-point stencil by diagonally
/// preconditioned CG. Pinned voxels take their Dirichlet value exactly.
/// Throws ConfigError if some connected part of the free voxels touches no
/// pinned voxel and has no shift, NumericalError if CG stalls.
Field solve_laplace(const Grid& grid, const Field& source,
                    std::span<const DirichletValue> dirichlet,
                    std::span<const Face> neumann_zero,
                    const SolveOptions& options = {},
                    SolveReport* report = nullptr);

/// Sparse Cholesky (LDL^T) factorization of a fixed operator, for problems
/// re-solved many times with changing sources or pinned values.
class LaplaceFactorization {
 public:
  explicit LaplaceFactorization(LaplaceOperator op);
  ~LaplaceFactorization();
  LaplaceFactorization(LaplaceFactorization&&) noexcept;
  LaplaceFactorization& operator=(LaplaceFactorization&&) noexcept;

  const LaplaceOperator& op() const noexcept;

  /// `pinned` overrides the Dirichlet values in operator order; empty keeps
  /// the values the operator was built with.
  Field solve(const Field& source, std::span<const double> pinned = {},
              double fill_value = 0.0) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tumor
