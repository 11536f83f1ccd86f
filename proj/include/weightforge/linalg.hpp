#pragma once
// Dense matrix helpers and a cyclic Jacobi eigensolver for the symmetric
// matrices that drive the exponent-2 separation oracle and exact weighted
// spectral norms. Sizes here are desk scale (n <= 64), so dense is fine.

#include <cstddef>
#include <span>
#include <vector>

namespace weightforge {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  static Matrix identity(std::size_t n);
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
std::vector<double> matvec(const Matrix& a, std::span<const double> x);

// Eigendecomposition of a symmetric matrix; values ascending, vectors
// returned as columns of `vectors` (A = V diag(values) V^T).
struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;
};

SymmetricEigen jacobi_eigen(const Matrix& a, int max_sweeps = 64);

// Largest singular value of a general rectangular matrix.
double spectral_norm(const Matrix& a);

// Convenience vector ops (kernels-backed where it matters).
double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
std::vector<double> scaled(std::span<const double> x, double alpha);

}  // namespace weightforge
