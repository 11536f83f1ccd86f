#include "weightforge/operator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "weightforge/parallel.hpp"
#include "weightforge/rng.hpp"

namespace weightforge {

void OperatorModel::validate() const {
  domain.validate();
  codomain.validate();
  if (matrix.rows != codomain.dim() || matrix.cols != domain.dim())
    throw std::invalid_argument("operator matrix shape does not match its spaces");
}

OperatorModel OperatorModel::identity(const SpaceDescriptor& space) {
  OperatorModel op{Matrix::identity(space.dim()), space, space};
  op.validate();
  return op;
}

std::vector<double> OperatorModel::apply(std::span<const double> f) const {
  if (f.size() != cols()) throw std::invalid_argument("apply: dimension mismatch");
  return matvec(matrix, f);
}

OperatorModel adjoint(const OperatorModel& op) {
  op.validate();
  OperatorModel out;
  out.domain = kothe_dual_space(op.codomain);
  out.codomain = kothe_dual_space(op.domain);
  out.matrix = Matrix(op.cols(), op.rows());
  const auto& mu1 = op.domain.measure.masses;
  const auto& mu2 = op.codomain.measure.masses;
  for (std::size_t j = 0; j < op.cols(); ++j)
    for (std::size_t i = 0; i < op.rows(); ++i)
      out.matrix.at(j, i) = op.matrix.at(i, j) * mu2[i] / mu1[j];
  return out;
}

OperatorModel modulus(const OperatorModel& op) {
  OperatorModel out = op;
  for (auto& v : out.matrix.data) v = std::fabs(v);
  return out;
}

std::vector<double> norm_gradient(const SpaceDescriptor& space,
                                  std::span<const double> f) {
  const std::size_t n = space.dim();
  std::vector<double> g(n, 0.0);
  const double p = space.exponent;
  const double nf = norm_eval(space, f);
  if (nf == 0.0) return g;
  if (is_inf(p)) {
    std::size_t best = 0;
    double bv = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = space.weight[i] * std::fabs(f[i]);
      if (v > bv) {
        bv = v;
        best = i;
      }
    }
    g[best] = (f[best] >= 0.0 ? 1.0 : -1.0) * space.weight[best];
    return g;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (f[i] == 0.0) continue;
    double sign = f[i] > 0.0 ? 1.0 : -1.0;
    g[i] = sign * std::pow(std::fabs(f[i]) / nf, p - 1.0) * space.weight[i] *
           space.measure.masses[i];
  }
  return g;
}

namespace {

std::vector<double> domain_scales(const SpaceDescriptor& s) {
  std::vector<double> out(s.dim());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = is_inf(s.exponent)
                 ? s.weight[i]
                 : std::pow(s.weight[i] * s.measure.masses[i], 1.0 / s.exponent);
  }
  return out;
}

// matrix of the operator seen between plain lp spaces
Matrix scaled_matrix(const OperatorModel& op) {
  auto s1 = domain_scales(op.domain);
  auto s2 = domain_scales(op.codomain);
  Matrix m = op.matrix;
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) m.at(i, j) *= s2[i] / s1[j];
  return m;
}

OperatorNormEstimate spectral_case(const OperatorModel& op) {
  Matrix m = scaled_matrix(op);
  Matrix gram(m.cols, m.cols);
  for (std::size_t i = 0; i < m.cols; ++i)
    for (std::size_t j = i; j < m.cols; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < m.rows; ++k) s += m.at(k, i) * m.at(k, j);
      gram.at(i, j) = s;
      gram.at(j, i) = s;
    }
  auto eig = jacobi_eigen(gram);
  OperatorNormEstimate est;
  est.exact = true;
  double top = eig.values.back();
  est.lower = top > 0.0 ? std::sqrt(top) : 0.0;
  auto s1 = domain_scales(op.domain);
  est.witness.resize(m.cols);
  for (std::size_t j = 0; j < m.cols; ++j)
    est.witness[j] = eig.vectors.at(j, m.cols - 1) / s1[j];
  return est;
}

double ratio_at(const OperatorModel& op, std::span<const double> f) {
  double d = norm_eval(op.domain, f);
  if (d == 0.0) return 0.0;
  auto tf = op.apply(f);
  return norm_eval(op.codomain, tf) / d;
}

OperatorNormEstimate ascend(const OperatorModel& op, std::vector<double> f,
                            int iters) {
  double best = ratio_at(op, f);
  double step = 0.5;
  for (int it = 0; it < iters; ++it) {
    double dn = norm_eval(op.domain, f);
    if (dn == 0.0) break;
    for (auto& v : f) v /= dn;
    auto tf = op.apply(f);
    double nn = norm_eval(op.codomain, tf);
    if (nn == 0.0) break;
    auto gy = norm_gradient(op.codomain, tf);
    auto gx = norm_gradient(op.domain, f);
    // gradient of log ratio
    std::vector<double> grad(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) {
      double tcol = 0.0;
      for (std::size_t i = 0; i < op.rows(); ++i) tcol += op.matrix.at(i, j) * gy[i];
      grad[j] = tcol / nn - gx[j];
    }
    std::vector<double> cand(f.size());
    bool improved = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      for (std::size_t j = 0; j < f.size(); ++j) cand[j] = f[j] + step * grad[j];
      double r = ratio_at(op, cand);
      if (r > best * (1.0 + 1e-14)) {
        best = r;
        f = cand;
        step *= 1.4;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved && step < 1e-14) break;
  }
  OperatorNormEstimate est;
  est.lower = best;
  est.witness = std::move(f);
  return est;
}

}  // namespace

OperatorNormEstimate operator_norm(const OperatorModel& op, int budget,
                                   std::uint64_t seed) {
  op.validate();
  const std::size_t n = op.cols();

  if (op.domain.exponent == 2.0 && op.codomain.exponent == 2.0)
    return spectral_case(op);

  if (op.domain.exponent == 1.0) {
    // extreme points of the l1 ball are scaled coordinate vectors
    OperatorNormEstimate est;
    est.exact = true;
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> e(n, 0.0);
      e[j] = 1.0;
      double r = ratio_at(op, e);
      if (r > est.lower) {
        est.lower = r;
        est.witness = e;
      }
    }
    return est;
  }

  if (is_inf(op.domain.exponent) && n <= 12) {
    OperatorNormEstimate est;
    est.exact = true;
    std::vector<double> f(n);
    const std::size_t patterns = std::size_t{1} << (n - 1);
    for (std::size_t mask = 0; mask < patterns; ++mask) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = ((mask >> j) & 1U) ? -1.0 : 1.0;
        f[j] = s / op.domain.weight[j];
      }
      double r = ratio_at(op, f);
      if (r > est.lower) {
        est.lower = r;
        est.witness = f;
      }
    }
    return est;
  }

  const int restarts = std::max(budget, 4);
  std::vector<OperatorNormEstimate> results(restarts);
  Rng base = Rng(seed).child("opnorm");
  parallel_for(static_cast<std::size_t>(restarts), [&](std::size_t r) {
    Rng rng = base.child("restart", r);
    std::vector<double> f0;
    if (r == 0) {
      f0.assign(n, 1.0);
    } else if (r <= n) {
      f0.assign(n, 0.0);
      f0[r - 1] = 1.0;
    } else {
      f0 = rng.gaussian_vector(n);
    }
    results[r] = ascend(op, std::move(f0), 200);
  });
  OperatorNormEstimate best;
  for (auto& est : results) {
    if (est.lower > best.lower) best = est;
  }
  return best;
}

double operator_norm_upper(const OperatorModel& op) {
  op.validate();
  Matrix m = scaled_matrix(op);
  const double q1 = op.domain.exponent;
  const double q2 = op.codomain.exponent;
  const double q1c = conjugate_exponent(q1);

  auto lp_of = [](std::span<const double> v, double p) {
    if (is_inf(p)) {
      double b = 0.0;
      for (double x : v) b = std::max(b, std::fabs(x));
      return b;
    }
    double s = 0.0;
    for (double x : v) s += std::pow(std::fabs(x), p);
    return std::pow(s, 1.0 / p);
  };

  // rowwise Hoelder: |(Mu)_i| <= ||row_i||_{q1'} ||u||_{q1}
  std::vector<double> rn(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    rn[i] = lp_of(std::span<const double>(m.data.data() + i * m.cols, m.cols), q1c);
  double bound = lp_of(rn, q2);

  // columnwise: ||Mu||_{q2} <= sum_j |u_j| ||col_j||_{q2}
  std::vector<double> cn(m.cols);
  for (std::size_t j = 0; j < m.cols; ++j) {
    std::vector<double> col(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) col[i] = m.at(i, j);
    cn[j] = lp_of(col, q2);
  }
  bound = std::min(bound, lp_of(cn, q1c));

  if (q1 == q2 && !is_inf(q1)) {
    // Riesz-Thorin between the l1 and l-inf endpoints
    double m1 = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < m.rows; ++i) s += std::fabs(m.at(i, j));
      m1 = std::max(m1, s);
    }
    double minf = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m.cols; ++j) s += std::fabs(m.at(i, j));
      minf = std::max(minf, s);
    }
    bound = std::min(bound, std::pow(m1, 1.0 / q1) * std::pow(minf, 1.0 - 1.0 / q1));
  }
  return bound;
}

Matrix partition_averaging_matrix(const MeasureSpace& measure,
                                  const std::vector<std::vector<std::size_t>>& cells) {
  measure.validate();
  const std::size_t n = measure.atom_count();
  std::vector<int> owner(n, -1);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t j : cells[c]) {
      if (j >= n || owner[j] != -1)
        throw std::invalid_argument("partition cells must be disjoint atom indices");
      owner[j] = static_cast<int>(c);
    }
  }
  for (int o : owner)
    if (o == -1) throw std::invalid_argument("partition must cover every atom");
  Matrix t(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (owner[i] == owner[j]) t.at(i, j) = measure.masses[j];
  return t;
}

}  // namespace weightforge
