#include "weightforge/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "weightforge/kernels.hpp"

namespace weightforge {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matrix product: dimension mismatch");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) {
        c.at(i, j) += aik * b.at(k, j);
      }
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.cols) throw std::invalid_argument("matvec: dimension mismatch");
  std::vector<double> y(a.rows);
  kernels::active().matvec(a.data.data(), a.rows, a.cols, x.data(), y.data());
  return y;
}

SymmetricEigen jacobi_eigen(const Matrix& a, int max_sweeps) {
  if (a.rows != a.cols) throw std::invalid_argument("jacobi_eigen: matrix not square");
  const std::size_t n = a.rows;
  Matrix m = a;
  Matrix v = Matrix::identity(n);

  double scale = 0.0;
  for (double x : m.data) scale = std::max(scale, std::fabs(x));
  if (scale == 0.0) {
    SymmetricEigen out;
    out.values.assign(n, 0.0);
    out.vectors = v;
    return out;
  }

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += m.at(i, j) * m.at(i, j);
    if (std::sqrt(off) <= 1e-15 * scale * static_cast<double>(n)) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m.at(p, q);
        if (std::fabs(apq) <= 1e-18 * scale) continue;
        const double app = m.at(p, p);
        const double aqq = m.at(q, q);
        const double tau = (aqq - app) / (2.0 * apq);
        double t;
        if (tau >= 0.0) {
          t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
        } else {
          t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m.at(k, p);
          const double mkq = m.at(k, q);
          m.at(k, p) = c * mkp - s * mkq;
          m.at(k, q) = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m.at(p, k);
          const double mqk = m.at(q, k);
          m.at(p, k) = c * mpk - s * mqk;
          m.at(q, k) = s * mpk + c * mqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v.at(k, p);
          const double vkq = v.at(k, q);
          v.at(k, p) = c * vkp - s * vkq;
          v.at(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  // sort ascending, carrying columns
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::size_t best = i;
    for (std::size_t j = i + 1; j < n; ++j)
      if (m.at(order[j], order[j]) < m.at(order[best], order[best])) best = j;
    std::swap(order[i], order[best]);
  }

  SymmetricEigen out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = m.at(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors.at(i, k) = v.at(i, order[k]);
  }
  return out;
}

double spectral_norm(const Matrix& a) {
  if (a.rows == 0 || a.cols == 0) return 0.0;
  // form the smaller Gram matrix
  const bool tall = a.rows >= a.cols;
  const std::size_t n = tall ? a.cols : a.rows;
  Matrix gram(n, n);
  if (tall) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < a.rows; ++k) s += a.at(k, i) * a.at(k, j);
        gram.at(i, j) = s;
        gram.at(j, i) = s;
      }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        double s = kernels::active().dot(a.data.data() + i * a.cols,
                                         a.data.data() + j * a.cols, a.cols);
        gram.at(i, j) = s;
        gram.at(j, i) = s;
      }
  }
  auto eig = jacobi_eigen(gram);
  double top = eig.values.empty() ? 0.0 : eig.values.back();
  return top > 0.0 ? std::sqrt(top) : 0.0;
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("dot: dimension mismatch");
  return kernels::active().dot(x.data(), y.data(), x.size());
}

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

std::vector<double> scaled(std::span<const double> x, double alpha) {
  std::vector<double> y(x.begin(), x.end());
  for (auto& v : y) v *= alpha;
  return y;
}

}  // namespace weightforge
