#pragma once

#include <span>
#include <vector>

namespace msic::linalg {

// Dense square matrix, row-major.
struct SquareMatrix {
  int n = 0;
  std::vector<double> a;

  SquareMatrix() = default;
  explicit SquareMatrix(int size) : n(size), a(static_cast<std::size_t>(size) * size, 0.0) {}

  double& operator()(int r, int c) noexcept { return a[static_cast<std::size_t>(r) * n + c]; }
  [[nodiscard]] double operator()(int r, int c) const noexcept { return a[static_cast<std::size_t>(r) * n + c]; }
  [[nodiscard]] double trace() const noexcept;
};

struct EigenSystem {
  std::vector<double> values;   // unsorted, in Jacobi output order
  SquareMatrix vectors;         // column j is the eigenvector of values[j]
  int sweeps = 0;
};

// Cyclic Jacobi rotations on a symmetric matrix until the off-diagonal
// Frobenius norm is <= tolerance * |trace| (or exactly zero).
EigenSystem jacobi_eigen(SquareMatrix symmetric, double tolerance = 1e-12, int max_sweeps = 100);

// Solves (A + damping*I) x = b for symmetric positive definite A + damping*I.
// Throws std::domain_error if the factorization breaks down.
std::vector<double> cholesky_solve(const SquareMatrix& a, std::span<const double> b, double damping = 0.0);

}  // namespace msic::linalg
