#include "weightforge/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "weightforge/kernels.hpp"
#include "weightforge/parallel.hpp"
#include "weightforge/rng.hpp"
#include "weightforge/simplex.hpp"

namespace weightforge {

namespace {

constexpr double kTiny = 1e-300;

bool entrywise_nonneg(const Matrix& m) {
  for (double v : m.data)
    if (v < 0.0) return false;
  return true;
}

bool is_diagonal(const Matrix& m) {
  if (m.rows != m.cols) return false;
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j)
      if (i != j && m.at(i, j) != 0.0) return false;
  return true;
}

std::vector<double> combined_weight(const SpaceDescriptor& s) {
  std::vector<double> w(s.dim());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = s.weight[i] * s.measure.masses[i];
  return w;
}

// <|f|^p, w>_mu with w a raw weight vector (zeros allowed)
double power_pairing(std::span<const double> f, std::span<const double> w,
                     const MeasureSpace& mu, double p) {
  std::vector<double> cw(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) cw[i] = w[i] * mu.masses[i];
  return kernels::weighted_pow_sum(f.data(), cw.data(), f.size(), p);
}

// ---------------------------------------------------------------------------
// dominating side: either C^p <|f|^p, z>_mu or C^p sum_k eta_k |<f,x'_k>|^p
// ---------------------------------------------------------------------------

struct DominatingSide {
  double cp = 1.0;  // C^p
  double p = 2.0;
  const MeasureSpace* mu = nullptr;
  // z-form
  std::vector<double> z;
  // pool form
  const std::vector<std::vector<double>>* pool = nullptr;
  const std::vector<double>* eta = nullptr;

  bool pool_form() const { return pool != nullptr; }

  double eval(std::span<const double> f) const {
    if (!pool_form()) return cp * power_pairing(f, z, *mu, p);
    double s = 0.0;
    for (std::size_t k = 0; k < pool->size(); ++k) {
      double w = (*eta)[k];
      if (w == 0.0) continue;
      double inner = 0.0;
      const auto& x = (*pool)[k];
      for (std::size_t j = 0; j < f.size(); ++j) inner += f[j] * x[j] * mu->masses[j];
      s += w * std::pow(std::fabs(inner), p);
    }
    return cp * s;
  }

  // out -= gradient of eval at f
  void subtract_gradient(std::span<const double> f, std::span<double> out) const {
    if (!pool_form()) {
      for (std::size_t j = 0; j < f.size(); ++j) {
        if (f[j] == 0.0) continue;
        double sgn = f[j] > 0.0 ? 1.0 : -1.0;
        out[j] -= cp * p * z[j] * mu->masses[j] * std::pow(std::fabs(f[j]), p - 1.0) * sgn;
      }
      return;
    }
    for (std::size_t k = 0; k < pool->size(); ++k) {
      double w = (*eta)[k];
      if (w == 0.0) continue;
      const auto& x = (*pool)[k];
      double inner = 0.0;
      for (std::size_t j = 0; j < f.size(); ++j) inner += f[j] * x[j] * mu->masses[j];
      if (inner == 0.0) continue;
      double sgn = inner > 0.0 ? 1.0 : -1.0;
      double c = cp * w * p * std::pow(std::fabs(inner), p - 1.0) * sgn;
      for (std::size_t j = 0; j < f.size(); ++j) out[j] -= c * x[j] * mu->masses[j];
    }
  }

  // true when eval(f) is a linear function of h = |f|^p
  bool coordinate_decomposable() const {
    if (!pool_form()) return true;
    for (const auto& x : *pool) {
      int nz = 0;
      for (double v : x)
        if (v != 0.0) ++nz;
      if (nz > 1) return false;
    }
    return true;
  }

  // d_j with eval(f) = sum_j d_j h_j when coordinate_decomposable
  std::vector<double> coordinate_coeffs(std::size_t n) const {
    std::vector<double> d(n, 0.0);
    if (!pool_form()) {
      for (std::size_t j = 0; j < n; ++j) d[j] = cp * z[j] * mu->masses[j];
      return d;
    }
    for (std::size_t k = 0; k < pool->size(); ++k) {
      double w = (*eta)[k];
      if (w == 0.0) continue;
      const auto& x = (*pool)[k];
      for (std::size_t j = 0; j < n; ++j) {
        if (x[j] != 0.0) d[j] += cp * w * std::pow(std::fabs(x[j] * mu->masses[j]), p);
      }
    }
    return d;
  }

  // eval(f) = f^T Q f at p == 2 (for the eigen oracle)
  Matrix quadratic_form(std::size_t n) const {
    Matrix q(n, n);
    if (!pool_form()) {
      for (std::size_t j = 0; j < n; ++j) q.at(j, j) = cp * z[j] * mu->masses[j];
      return q;
    }
    for (std::size_t k = 0; k < pool->size(); ++k) {
      double w = (*eta)[k];
      if (w == 0.0) continue;
      const auto& x = (*pool)[k];
      for (std::size_t i = 0; i < n; ++i) {
        double xi = x[i] * mu->masses[i];
        if (xi == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j)
          q.at(i, j) += cp * w * xi * x[j] * mu->masses[j];
      }
    }
    return q;
  }
};

// ---------------------------------------------------------------------------
// feasible set for h = |f|^p as f ranges over the domain unit ball
// ---------------------------------------------------------------------------

struct PowerBall {
  bool box = false;
  std::vector<double> omega;  // ball: sum omega_j h_j^r <= 1
  double r = 1.0;
  std::vector<double> hmax;  // box case

  static PowerBall from(const SpaceDescriptor& domain, double p) {
    PowerBall h;
    if (is_inf(domain.exponent)) {
      h.box = true;
      h.hmax.resize(domain.dim());
      for (std::size_t j = 0; j < h.hmax.size(); ++j)
        h.hmax[j] = std::pow(1.0 / domain.weight[j], p);
      return h;
    }
    h.omega = combined_weight(domain);
    h.r = domain.exponent / p;
    return h;
  }

  // maximize <g, h> over the set; only the positive part of g contributes
  std::pair<std::vector<double>, double> linear_max(std::span<const double> g) const {
    const std::size_t n = box ? hmax.size() : omega.size();
    std::vector<double> h(n, 0.0);
    double value = 0.0;
    if (box) {
      for (std::size_t j = 0; j < n; ++j) {
        if (g[j] > 0.0) {
          h[j] = hmax[j];
          value += g[j] * hmax[j];
        }
      }
      return {std::move(h), value};
    }
    if (r <= 1.0 + 1e-14) {
      std::size_t best = n;
      double bv = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (g[j] <= 0.0) continue;
        double v = g[j] / omega[j];
        if (v > bv) {
          bv = v;
          best = j;
        }
      }
      if (best < n) {
        h[best] = 1.0 / omega[best];
        value = bv;
      }
      return {std::move(h), value};
    }
    // r > 1: Hoelder-norming point
    double s = 0.0;
    std::vector<double> t(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (g[j] <= 0.0) continue;
      t[j] = std::pow(g[j] / omega[j], 1.0 / (r - 1.0));
      s += omega[j] * std::pow(t[j], r);
    }
    if (s <= 0.0) return {std::move(h), 0.0};
    double c = std::pow(s, -1.0 / r);
    for (std::size_t j = 0; j < n; ++j) {
      h[j] = c * t[j];
      if (g[j] > 0.0) value += g[j] * h[j];
    }
    return {std::move(h), value};
  }

  std::vector<double> interior_point() const {
    if (box) {
      std::vector<double> h = hmax;
      for (auto& v : h) v *= 0.5;
      return h;
    }
    const std::size_t n = omega.size();
    double total = 0.0;
    for (double w : omega) total += w;
    double c = std::pow(0.5 / total, 1.0 / r);
    return std::vector<double>(n, c);
  }
};

// ---------------------------------------------------------------------------
// separation oracles
// ---------------------------------------------------------------------------

struct OracleOutcome {
  bool violated = false;
  std::vector<double> cut;  // unit domain norm
  double value = 0.0;
  bool certified = false;  // "no violation" is certified
  const char* grade = "multistart";
};

double violation_at(const OperatorModel& op, std::span<const double> ew, double p,
                    const DominatingSide& side, std::span<const double> f) {
  auto tf = op.apply(f);
  double lhs = kernels::weighted_pow_sum(tf.data(), ew.data(), tf.size(), p);
  return lhs - side.eval(f);
}

std::vector<double> normalized_in(const SpaceDescriptor& s, std::vector<double> f) {
  double n = norm_eval(s, f);
  if (n > 0.0)
    for (auto& v : f) v /= n;
  return f;
}

// exact eigen oracle: p == 2 with an exponent-2 domain
OracleOutcome eigen_oracle(const OperatorModel& op, std::span<const double> ew,
                           const DominatingSide& side, double accept_tol) {
  const std::size_t n = op.cols();
  Matrix a(n, n);
  for (std::size_t i = 0; i < op.rows(); ++i) {
    const double e = ew[i];
    if (e == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const double tij = op.matrix.at(i, j);
      if (tij == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) a.at(j, k) += e * tij * op.matrix.at(i, k);
    }
  }
  Matrix q = side.quadratic_form(n);
  for (std::size_t i = 0; i < n * n; ++i) a.data[i] -= q.data[i];

  auto dw = combined_weight(op.domain);
  Matrix m(n, n);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      m.at(i, j) = a.at(i, j) / std::sqrt(dw[i] * dw[j]);
      scale = std::max(scale, std::fabs(m.at(i, j)));
    }
  auto eig = jacobi_eigen(m);
  const double lam = eig.values.back();
  OracleOutcome out;
  out.grade = "eigen";
  const double tol = accept_tol * std::max(1.0, scale) * static_cast<double>(n);
  if (lam > tol) {
    out.violated = true;
    std::vector<double> f(n);
    for (std::size_t j = 0; j < n; ++j)
      f[j] = eig.vectors.at(j, n - 1) / std::sqrt(dw[j]);
    out.cut = normalized_in(op.domain, std::move(f));
    out.value = lam;
    return out;
  }
  out.certified = true;
  return out;
}

// coordinatewise exact oracle for diagonal operators
OracleOutcome coordinate_oracle(const OperatorModel& op, std::span<const double> ew,
                                double p, const DominatingSide& side,
                                const PowerBall& hset, double accept_tol) {
  const std::size_t n = op.cols();
  auto d = side.coordinate_coeffs(n);
  std::vector<double> w(n);
  double scale = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    double t = std::fabs(op.matrix.at(j, j));
    w[j] = std::pow(t, p) * ew[j] - d[j];
    scale = std::max(scale, std::fabs(w[j]));
  }
  auto [h, value] = hset.linear_max(w);
  OracleOutcome out;
  out.grade = "coordinate";
  if (value > accept_tol * scale) {
    out.violated = true;
    std::vector<double> f(n);
    for (std::size_t j = 0; j < n; ++j) f[j] = std::pow(h[j], 1.0 / p);
    out.cut = normalized_in(op.domain, std::move(f));
    out.value = value;
    return out;
  }
  out.certified = true;
  return out;
}

// certified concave oracle for entrywise nonnegative operators with a
// coordinate-decomposable dominating side. In h = |f|^p coordinates the
// violation V(h) = sum_a e_a (M h^{1/p})_a^p - <d,h> is concave on h >= 0,
// so the Frank-Wolfe gap bounds the global maximum from above.
OracleOutcome concave_oracle(const OperatorModel& op, std::span<const double> ew,
                             double p, const DominatingSide& side,
                             const PowerBall& hset, const SynthesisOptions& opts) {
  const std::size_t n = op.cols();
  const std::size_t m = op.rows();
  auto d = side.coordinate_coeffs(n);

  auto atoms_of = [&](std::span<const double> h, std::vector<double>& g_atoms) {
    std::vector<double> root(n);
    for (std::size_t j = 0; j < n; ++j) root[j] = std::pow(std::max(h[j], 0.0), 1.0 / p);
    g_atoms.assign(m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += op.matrix.at(a, j) * root[j];
      g_atoms[a] = s;
    }
  };
  auto value_of = [&](std::span<const double> h) {
    std::vector<double> g;
    atoms_of(h, g);
    double v = 0.0;
    for (std::size_t a = 0; a < m; ++a) v += ew[a] * std::pow(g[a], p);
    for (std::size_t j = 0; j < n; ++j) v -= d[j] * h[j];
    return v;
  };
  auto gradient_at = [&](std::span<const double> h, std::vector<double>& grad) {
    std::vector<double> g;
    atoms_of(h, g);
    grad.assign(n, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
      const double c = ew[a] * std::pow(g[a], p - 1.0);
      if (c == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) grad[j] += c * op.matrix.at(a, j);
    }
    for (std::size_t j = 0; j < n; ++j) {
      double hj = std::max(h[j], 1e-30);
      grad[j] = grad[j] * std::pow(hj, 1.0 / p - 1.0) - d[j];
    }
  };

  OracleOutcome out;
  out.grade = "concave";

  auto h0 = hset.interior_point();
  double scale = std::fabs(value_of(h0)) + 1.0;

  if (p == 1.0) {
    std::vector<double> g(n);
    for (std::size_t j = 0; j < n; ++j) {
      double colsum = 0.0;
      for (std::size_t a = 0; a < m; ++a) colsum += ew[a] * op.matrix.at(a, j);
      g[j] = colsum - d[j];
    }
    auto [h, value] = hset.linear_max(g);
    if (value > opts.accept_tol * scale) {
      out.violated = true;
      out.cut = normalized_in(op.domain, h);
      out.value = value;
    } else {
      out.certified = true;
    }
    return out;
  }

  std::vector<double> h = h0;
  double best_value = value_of(h);
  std::vector<double> best_h = h;
  double min_upper = std::numeric_limits<double>::infinity();
  std::vector<double> grad;

  for (int it = 0; it < opts.fw_max_iters; ++it) {
    gradient_at(h, grad);
    auto [s, smax] = hset.linear_max(grad);
    double gh = 0.0;
    for (std::size_t j = 0; j < n; ++j) gh += grad[j] * h[j];
    const double gap = smax - gh;  // >= V* - V(h) by concavity
    const double v = value_of(h);
    if (v > best_value) {
      best_value = v;
      best_h = h;
    }
    min_upper = std::min(min_upper, v + std::max(gap, 0.0));
    if (best_value > opts.accept_tol * scale) break;
    if (min_upper <= opts.accept_tol * scale) break;
    // ternary line search on the concave section
    double lo = 0.0, hi = 1.0;
    for (int ls = 0; ls < 48; ++ls) {
      double m1 = lo + (hi - lo) / 3.0;
      double m2 = hi - (hi - lo) / 3.0;
      std::vector<double> h1(n), h2(n);
      for (std::size_t j = 0; j < n; ++j) {
        h1[j] = (1.0 - m1) * h[j] + m1 * s[j];
        h2[j] = (1.0 - m2) * h[j] + m2 * s[j];
      }
      if (value_of(h1) < value_of(h2))
        lo = m1;
      else
        hi = m2;
    }
    double gamma = 0.5 * (lo + hi);
    if (gamma <= 1e-16) gamma = 1.0 / (2.0 + it);
    for (std::size_t j = 0; j < n; ++j) h[j] = (1.0 - gamma) * h[j] + gamma * s[j];
  }

  if (best_value > opts.accept_tol * scale) {
    out.violated = true;
    std::vector<double> f(n);
    for (std::size_t j = 0; j < n; ++j) f[j] = std::pow(std::max(best_h[j], 0.0), 1.0 / p);
    out.cut = normalized_in(op.domain, std::move(f));
    out.value = best_value;
    return out;
  }
  if (min_upper <= opts.accept_tol * scale) {
    out.certified = true;
  }
  return out;  // uncertified absence when the gap never closed
}

// nonconvex fallback: multistart projected ascent on the violation
OracleOutcome multistart_oracle(const OperatorModel& op, std::span<const double> ew,
                                double p, const DominatingSide& side,
                                const std::vector<std::vector<double>>& warm,
                                const SynthesisOptions& opts, std::uint64_t round) {
  const std::size_t n = op.cols();
  Rng base = Rng(opts.seed).child("oracle", round);

  auto ascend_from = [&](std::vector<double> f)
      -> std::pair<double, std::vector<double>> {
    f = normalized_in(op.domain, std::move(f));
    if (norm_eval(op.domain, f) == 0.0) return {-1.0, f};
    double best = violation_at(op, ew, p, side, f);
    double step = 0.3;
    std::vector<double> grad(n), cand(n);
    for (int it = 0; it < opts.oracle_iters; ++it) {
      auto tf = op.apply(f);
      grad.assign(n, 0.0);
      for (std::size_t i = 0; i < op.rows(); ++i) {
        if (tf[i] == 0.0 || ew[i] == 0.0) continue;
        double c =
            ew[i] * p * std::pow(std::fabs(tf[i]), p - 1.0) * (tf[i] > 0.0 ? 1.0 : -1.0);
        for (std::size_t j = 0; j < n; ++j) grad[j] += c * op.matrix.at(i, j);
      }
      side.subtract_gradient(f, grad);
      double gn = norm2(grad);
      if (gn <= 1e-15) break;
      bool improved = false;
      for (int attempt = 0; attempt < 8; ++attempt) {
        for (std::size_t j = 0; j < n; ++j) cand[j] = f[j] + step * grad[j] / gn;
        auto cn = normalized_in(op.domain, cand);
        double v = violation_at(op, ew, p, side, cn);
        if (v > best + 1e-16 * std::fabs(best)) {
          best = v;
          f = cn;
          step *= 1.4;
          improved = true;
          break;
        }
        step *= 0.5;
      }
      if (!improved && step < 1e-13) break;
    }
    return {best, f};
  };

  const int restarts = std::max(4, opts.oracle_budget);
  std::vector<std::pair<double, std::vector<double>>> results(restarts);
  parallel_for(static_cast<std::size_t>(restarts), [&](std::size_t r) {
    Rng rng = base.child("restart", r);
    std::vector<double> f0;
    if (r < n) {
      f0.assign(n, 0.0);
      f0[r] = 1.0;
    } else if (r == n) {
      f0.assign(n, 1.0);
    } else if (r - n - 1 < warm.size()) {
      f0 = warm[r - n - 1];
      for (auto& v : f0) v += 0.05 * rng.gaussian();
    } else {
      f0 = rng.gaussian_vector(n);
    }
    results[r] = ascend_from(std::move(f0));
  });

  OracleOutcome out;
  out.grade = "multistart";
  double best = results[0].first;
  std::size_t pick = 0;
  for (std::size_t r = 1; r < results.size(); ++r) {
    const double tie = 1e-12 * std::max(1.0, std::fabs(best));
    if (results[r].first > best + tie) {
      best = results[r].first;
      pick = r;
    } else if (std::fabs(results[r].first - best) <= tie &&
               results[r].second < results[pick].second) {
      pick = r;  // lexicographic tie-break for determinism
    }
  }
  double scale = 1.0 + std::fabs(side.eval(results[pick].second));
  if (best > opts.accept_tol * scale) {
    out.violated = true;
    out.cut = results[pick].second;
    out.value = best;
  }
  return out;  // never certified
}

enum class OracleKind { Eigen, Coordinate, Concave, Multistart };

OracleKind pick_oracle(const OperatorModel& op, double p, bool side_coordinate) {
  if (p == 2.0 && op.domain.exponent == 2.0) return OracleKind::Eigen;
  if (is_diagonal(op.matrix) && side_coordinate) return OracleKind::Coordinate;
  if (entrywise_nonneg(op.matrix) && side_coordinate) return OracleKind::Concave;
  return OracleKind::Multistart;
}

OracleOutcome run_oracle(OracleKind kind, const OperatorModel& op,
                         std::span<const double> ew, double p,
                         const DominatingSide& side, const PowerBall& hset,
                         const std::vector<std::vector<double>>& warm,
                         const SynthesisOptions& opts, std::uint64_t round) {
  switch (kind) {
    case OracleKind::Eigen:
      return eigen_oracle(op, ew, side, opts.accept_tol);
    case OracleKind::Coordinate:
      return coordinate_oracle(op, ew, p, side, hset, opts.accept_tol);
    case OracleKind::Concave:
      return concave_oracle(op, ew, p, side, hset, opts);
    case OracleKind::Multistart:
      break;
  }
  return multistart_oracle(op, ew, p, side, warm, opts, round);
}

bool duplicate_cut(const std::vector<std::vector<double>>& cuts,
                   std::span<const double> f) {
  double nf = norm2(f);
  if (nf == 0.0) return true;
  for (const auto& c : cuts) {
    double nc = norm2(c);
    if (nc == 0.0) continue;
    double cosv = std::fabs(dot(c, f)) / (nc * nf);
    if (cosv > 1.0 - 1e-10) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// master problems
// ---------------------------------------------------------------------------

struct CutRow {
  std::vector<double> coeffs;  // against z; already carries C^p mu |f|^p
  double rhs = 0.0;
  double scale = 1.0;
};

struct MasterOutcome {
  bool feasible = false;
  std::vector<double> z;
  double margin = 0.0;
};

// maximize the worst cut margin over an outer approximation of the positive
// dual ball, then re-solve for the leanest weight holding a safe fraction of
// it. Kelley linearizations tighten non-box balls; emptiness of the outer
// approximation is a rigorous infeasibility proof.
MasterOutcome solve_domination_master(const std::vector<CutRow>& cuts,
                                      const DualBallDescriptor& ball,
                                      const MeasureSpace& mu,
                                      const SynthesisOptions& opts) {
  const bool box = ball.is_box();
  const std::size_t n = ball.dual_space.dim();
  std::vector<double> caps(n);
  double ball_r = 1.0;
  std::vector<double> ball_omega;
  if (box) {
    caps = ball.box_max();
  } else {
    const auto& ds = ball.dual_space;
    ball_r = ds.exponent;
    ball_omega = combined_weight(ds);
    for (std::size_t j = 0; j < n; ++j)
      caps[j] = std::pow(1.0 / ball_omega[j], 1.0 / ball_r);
  }

  std::vector<std::vector<double>> kelley;

  auto ball_norm = [&](std::span<const double> z) {
    return norm_eval(ball.dual_space, z);
  };
  auto add_kelley_cut = [&](std::span<const double> z) {
    double nz = ball_norm(z);
    std::vector<double> gamma(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (z[j] <= 0.0) continue;
      gamma[j] = ball_omega[j] * std::pow(z[j], ball_r - 1.0) / std::pow(nz, ball_r - 1.0);
    }
    kelley.push_back(std::move(gamma));
  };

  for (int iter = 0; iter < 80; ++iter) {
    LpProblem p;
    p.num_vars = n + 2;  // z, t+, t-
    p.objective.assign(n + 2, 0.0);
    p.objective[n] = 1.0;
    p.objective[n + 1] = -1.0;
    p.upper.assign(n + 2, std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < n; ++j) p.upper[j] = caps[j];
    p.upper[n] = 1e6;
    p.upper[n + 1] = 1e6;
    for (const auto& cut : cuts) {
      auto& row = p.add_row('>', cut.rhs);
      for (std::size_t j = 0; j < n; ++j) row.coeffs[j] = cut.coeffs[j];
      row.coeffs[n] = -cut.scale;
      row.coeffs[n + 1] = cut.scale;
    }
    for (const auto& g : kelley) {
      auto& row = p.add_row('<', 1.0);
      for (std::size_t j = 0; j < n; ++j) row.coeffs[j] = g[j];
    }
    auto solA = solve_lp(p);
    if (solA.status != LpStatus::Optimal) return MasterOutcome{};
    double margin = solA.x[n] - solA.x[n + 1];
    if (margin < -opts.lp_feas_tol) return MasterOutcome{};
    std::vector<double> z(solA.x.begin(), solA.x.begin() + n);
    if (!box && ball_norm(z) > 1.0 + 1e-11) {
      add_kelley_cut(z);
      continue;
    }

    // lean weight at a safe margin floor
    double floor = std::min(margin, 1e-7) * 0.5;
    LpProblem q;
    q.num_vars = n;
    q.objective.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) q.objective[j] = -mu.masses[j];
    q.upper = caps;
    for (const auto& cut : cuts) {
      auto& row = q.add_row('>', cut.rhs + cut.scale * floor);
      row.coeffs = cut.coeffs;
    }
    for (const auto& g : kelley) {
      auto& row = q.add_row('<', 1.0);
      row.coeffs = g;
    }
    auto solB = solve_lp(q);
    std::vector<double> zb = (solB.status == LpStatus::Optimal) ? solB.x : z;
    if (!box && ball_norm(zb) > 1.0 + 1e-11) {
      add_kelley_cut(zb);
      continue;
    }
    MasterOutcome out;
    out.feasible = true;
    out.z = std::move(zb);
    out.margin = margin;
    for (auto& v : out.z)
      if (std::fabs(v) < 1e-14) v = 0.0;  // keep nulls as exact zeros
    return out;
  }
  return MasterOutcome{};
}

std::vector<std::vector<double>> verification_vectors(
    std::size_t n, int count, Rng& rng, const std::vector<std::vector<double>>& extra) {
  std::vector<std::vector<double>> batch;
  batch.reserve(static_cast<std::size_t>(count) + n + 2 + extra.size());
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    batch.push_back(std::move(e));
  }
  batch.emplace_back(n, 1.0);
  for (const auto& f : extra) batch.push_back(f);
  for (int i = 0; i < count; ++i) {
    if (i % 4 == 3) {
      std::vector<double> f(n, 0.0);
      std::size_t hits = 1 + rng.uniform_index(n);
      for (std::size_t k = 0; k < hits; ++k) f[rng.uniform_index(n)] = rng.gaussian();
      batch.push_back(std::move(f));
    } else {
      batch.push_back(rng.gaussian_vector(n));
    }
  }
  return batch;
}

double batch_residual(const OperatorModel& op, std::span<const double> ew, double p,
                      const DominatingSide& side, int count, std::uint64_t seed,
                      const std::vector<std::vector<double>>& extra) {
  Rng rng = Rng(seed).child("verify");
  auto batch = verification_vectors(op.cols(), count, rng, extra);
  double worst = 0.0;
  for (const auto& f : batch) {
    auto tf = op.apply(f);
    double lhs = kernels::weighted_pow_sum(tf.data(), ew.data(), tf.size(), p);
    double rhs = side.eval(f);
    double rel = (lhs - rhs) / std::max({lhs, rhs, kTiny});
    worst = std::max(worst, rel);
  }
  return worst;
}

std::vector<double> codomain_eweights(const OperatorModel& op,
                                      std::span<const double> y_star) {
  std::vector<double> ew(op.rows());
  for (std::size_t i = 0; i < op.rows(); ++i)
    ew[i] = y_star[i] * op.codomain.measure.masses[i];
  return ew;
}

void check_y_star(const OperatorModel& op, double p, std::span<const double> y_star) {
  if (y_star.size() != op.rows())
    throw std::invalid_argument("y_star length must match the codomain atom count");
  for (double v : y_star)
    if (v < 0.0) throw std::invalid_argument("y_star must be nonnegative");
  auto ball = power_dual_ball(op.codomain, p);
  if (!ball.contains(y_star, 1e-6))
    throw std::invalid_argument("y_star lies outside the codomain power-dual ball");
}

struct CoreResult {
  SynthesisStatus status = SynthesisStatus::Unknown;
  std::vector<double> z;
  std::vector<std::vector<double>> cuts;
  std::vector<double> witness;
  const char* grade = "multistart";
  bool certified = false;
};

CoreResult domination_core(const OperatorModel& op, double p,
                           std::span<const double> y_star, double c,
                           const SynthesisOptions& opts) {
  const std::size_t n = op.cols();
  auto ew = codomain_eweights(op, y_star);
  auto ball = power_dual_ball(op.domain, p);
  auto hset = PowerBall::from(op.domain, p);
  const double cp = std::pow(c, p);
  const auto& mu = op.domain.measure;

  DominatingSide side;
  side.cp = cp;
  side.p = p;
  side.mu = &op.domain.measure;

  OracleKind kind = pick_oracle(op, p, true);

  // start from the least restrictive admissible weight
  std::vector<double> top;
  if (ball.is_box()) {
    top = ball.box_max();
  } else {
    PowerBall zset{false, combined_weight(ball.dual_space), ball.dual_space.exponent, {}};
    top = zset.linear_max(std::vector<double>(n, 1.0)).first;
  }

  CoreResult res;
  std::vector<CutRow> rows;
  side.z.assign(top.begin(), top.end());

  for (int round = 0; round < opts.max_cut_rounds; ++round) {
    auto out = run_oracle(kind, op, ew, p, side, hset, res.cuts, opts,
                          static_cast<std::uint64_t>(round));
    res.grade = out.grade;
    if (!out.violated) {
      res.z = side.z;
      res.certified = out.certified;
      res.status = out.certified ? SynthesisStatus::Feasible : SynthesisStatus::Unknown;
      return res;
    }
    const auto& f = out.cut;
    if (ball.is_box()) {
      // a cut violated at the box corner kills every admissible weight
      double lhsr;
      {
        auto tf = op.apply(f);
        lhsr = kernels::weighted_pow_sum(tf.data(), ew.data(), tf.size(), p);
      }
      double best = cp * power_pairing(f, top, mu, p);
      if (best < lhsr * (1.0 - 1e-9)) {
        res.status = SynthesisStatus::Infeasible;
        res.witness = f;
        return res;
      }
    }
    if (duplicate_cut(res.cuts, f)) {
      res.status = SynthesisStatus::Unknown;  // stalled; refuse to certify
      res.z = side.z;
      return res;
    }
    res.cuts.push_back(f);
    CutRow row;
    row.coeffs.resize(n);
    for (std::size_t j = 0; j < n; ++j)
      row.coeffs[j] = cp * mu.masses[j] * std::pow(std::fabs(f[j]), p);
    {
      auto tf = op.apply(f);
      row.rhs = kernels::weighted_pow_sum(tf.data(), ew.data(), tf.size(), p);
    }
    row.scale = std::max(1.0, row.rhs);
    rows.push_back(std::move(row));

    auto master = solve_domination_master(rows, ball, mu, opts);
    if (!master.feasible) {
      res.status = SynthesisStatus::Infeasible;
      res.witness = f;
      return res;
    }
    side.z = master.z;
  }
  res.status = SynthesisStatus::Unknown;  // cut budget exhausted
  res.z = side.z;
  return res;
}

}  // namespace

SynthesisResult synthesize_dominating_weight(const OperatorModel& op, double p,
                                             std::span<const double> y_star, double c,
                                             const SynthesisOptions& opts) {
  op.validate();
  if (!(p >= 1.0) || is_inf(p))
    throw std::invalid_argument("synthesis exponent must be finite and >= 1");
  if (!(c > 0.0)) throw std::invalid_argument("domination constant must be positive");
  if (op.domain.exponent < p - 1e-12 || op.codomain.exponent < p - 1e-12)
    throw std::invalid_argument(
        "domain and codomain must be p-convex with constant 1 (exponent >= p); "
        "spaces with worse convexity are rejected, not renormed");
  check_y_star(op, p, y_star);

  SynthesisResult result;
  OracleKind kind = pick_oracle(op, p, true);

  auto package = [&](const CoreResult& core, const char* route, bool certified) {
    DominationCertificate cert;
    cert.p = p;
    cert.constant = c;
    cert.y_star.assign(y_star.begin(), y_star.end());
    cert.z_star = core.z;
    cert.cuts = core.cuts;
    cert.route = route;
    cert.certified = certified;
    DominatingSide side;
    side.cp = std::pow(c, p);
    side.p = p;
    side.mu = &op.domain.measure;
    side.z = core.z;
    auto ew = codomain_eweights(op, y_star);
    cert.residual =
        batch_residual(op, ew, p, side, opts.verify_batch / 4, opts.seed + 17, core.cuts);
    return cert;
  };

  if (kind != OracleKind::Multistart) {
    auto core = domination_core(op, p, y_star, c, opts);
    result.status = core.status;
    if (core.status == SynthesisStatus::Infeasible) {
      result.infeasibility_witness = core.witness;
      return result;
    }
    result.certificate = package(core, core.grade, core.certified);
    return result;
  }

  // signed operator outside the exact classes: try the positive majorant,
  // whose certificate transfers to the operator itself
  auto core_m = domination_core(modulus(op), p, y_star, c, opts);
  if (core_m.status == SynthesisStatus::Feasible && core_m.certified) {
    result.status = SynthesisStatus::Feasible;
    result.certificate = package(core_m, "positive_majorant", true);
    return result;
  }
  auto core = domination_core(op, p, y_star, c, opts);
  result.status = core.status;
  if (core.status == SynthesisStatus::Infeasible) {
    result.infeasibility_witness = core.witness;
    return result;
  }
  if (core.status == SynthesisStatus::Feasible && core.certified) {
    result.certificate = package(core, core.grade, true);
    return result;
  }
  result.status = SynthesisStatus::Unknown;
  result.certificate = package(core, "empirical", false);
  return result;
}

MinConstantResult min_constant_domination(const OperatorModel& op, double p,
                                          std::span<const double> y_star, double tol,
                                          const SynthesisOptions& opts,
                                          double lower_hint) {
  op.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");

  // rho_p(T) <= || |T| || makes the modulus interpolation bound a valid cap;
  // a certified lower bound from the witness side tightens the start
  const double crude = std::max(operator_norm_upper(modulus(op)), 1e-12);
  double lo = std::max(0.0, lower_hint * (1.0 - 1e-9));
  double hi = std::max(crude * (1.0 + 1e-9), lo);
  double emp_hi = hi;

  auto feasible_at = [&](double c) {
    SynthesisOptions o = opts;
    o.seed = opts.seed + 101;
    return synthesize_dominating_weight(op, p, y_star, c, o);
  };

  for (int it = 0; it < 40 && (hi - lo) > tol * std::max(1.0, lo); ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= 0.0) break;
    auto r = feasible_at(mid);
    if (r.status == SynthesisStatus::Feasible) {
      hi = mid;
      emp_hi = std::min(emp_hi, mid);
    } else if (r.status == SynthesisStatus::Infeasible) {
      lo = mid;
    } else {
      emp_hi = std::min(emp_hi, mid);  // unviolated but uncertified
      lo = mid;
    }
  }

  MinConstantResult out;
  out.constant = hi;
  out.empirical_constant = std::min(emp_hi, hi);
  double c = hi * (1.0 + 0.1 * tol);
  auto fin = feasible_at(c);
  for (int k = 0; k < 6 && fin.status != SynthesisStatus::Feasible; ++k) {
    c *= 1.0 + tol;  // numerical edge at the boundary: step the constant up
    fin = feasible_at(c);
  }
  out.constant = c;
  out.certified = fin.status == SynthesisStatus::Feasible;
  out.certificate = fin.certificate;
  return out;
}

// ---------------------------------------------------------------------------
// Pietsch synthesis
// ---------------------------------------------------------------------------

std::vector<std::vector<double>> coordinate_pool(const SpaceDescriptor& domain) {
  domain.validate();
  auto dual = kothe_dual_space(domain);
  std::vector<std::vector<double>> pool;
  pool.reserve(domain.dim());
  for (std::size_t j = 0; j < domain.dim(); ++j) {
    std::vector<double> e(domain.dim(), 0.0);
    e[j] = 1.0;
    double nrm = norm_eval(dual, e);
    e[j] = 1.0 / nrm;
    pool.push_back(std::move(e));
  }
  return pool;
}

namespace {

struct PietschMasterOutcome {
  bool feasible = false;
  std::vector<double> eta;
  double margin = 0.0;
};

PietschMasterOutcome solve_pietsch_master(const std::vector<std::vector<double>>& phi,
                                          const std::vector<double>& rhs,
                                          std::size_t pool_size,
                                          const SynthesisOptions& opts) {
  LpProblem p;
  p.num_vars = pool_size + 2;
  p.objective.assign(pool_size + 2, 0.0);
  p.objective[pool_size] = 1.0;
  p.objective[pool_size + 1] = -1.0;
  p.upper.assign(pool_size + 2, std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < pool_size; ++k) p.upper[k] = 1.0;
  p.upper[pool_size] = 1e6;
  p.upper[pool_size + 1] = 1e6;
  {
    auto& row = p.add_row('=', 1.0);
    for (std::size_t k = 0; k < pool_size; ++k) row.coeffs[k] = 1.0;
  }
  for (std::size_t c = 0; c < phi.size(); ++c) {
    double scale = std::max(1.0, rhs[c]);
    auto& row = p.add_row('>', rhs[c]);
    for (std::size_t k = 0; k < pool_size; ++k) row.coeffs[k] = phi[c][k];
    row.coeffs[pool_size] = -scale;
    row.coeffs[pool_size + 1] = scale;
  }
  auto sol = solve_lp(p);
  PietschMasterOutcome out;
  if (sol.status != LpStatus::Optimal) return out;
  double margin = sol.x[pool_size] - sol.x[pool_size + 1];
  if (margin < -opts.lp_feas_tol) return out;
  out.feasible = true;
  out.margin = margin;
  out.eta.assign(sol.x.begin(), sol.x.begin() + pool_size);
  double s = 0.0;
  for (auto& v : out.eta) {
    if (v < 1e-14) v = 0.0;
    s += v;
  }
  if (s > 0.0)
    for (auto& v : out.eta) v /= s;  // exactly on the simplex
  return out;
}

double pool_phi(const std::vector<double>& x, std::span<const double> f,
                const MeasureSpace& mu, double p) {
  double inner = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) inner += f[j] * x[j] * mu.masses[j];
  return std::pow(std::fabs(inner), p);
}

}  // namespace

PietschResult synthesize_pietsch_measure(const OperatorModel& op, double p,
                                         std::span<const double> y_star, double c,
                                         std::vector<std::vector<double>> pool,
                                         const SynthesisOptions& opts) {
  op.validate();
  if (!(p >= 1.0) || is_inf(p))
    throw std::invalid_argument("synthesis exponent must be finite and >= 1");
  if (!(c > 0.0)) throw std::invalid_argument("domination constant must be positive");
  if (op.codomain.exponent < p - 1e-12)
    throw std::invalid_argument("codomain must be p-convex with constant 1");
  if (pool.empty()) throw std::invalid_argument("pool of dual functionals is empty");
  check_y_star(op, p, y_star);
  auto dual = kothe_dual_space(op.domain);
  for (auto& x : pool) {
    if (x.size() != op.cols())
      throw std::invalid_argument("pool functional size mismatch");
    double nrm = norm_eval(dual, x);
    if (nrm > 1.0 + 1e-9)
      for (auto& v : x) v /= nrm;
  }

  const std::size_t n = op.cols();
  auto ew = codomain_eweights(op, y_star);
  auto hset = PowerBall::from(op.domain, p);
  const double cp = std::pow(c, p);
  const auto& mu = op.domain.measure;

  PietschResult result;
  PietschCertificate cert;
  cert.p = p;
  cert.constant = c;
  cert.y_star.assign(y_star.begin(), y_star.end());

  std::vector<double> eta(pool.size(), 1.0 / static_cast<double>(pool.size()));
  std::vector<std::vector<double>> phi_rows;
  std::vector<double> rhs_rows;

  DominatingSide side;
  side.cp = cp;
  side.p = p;
  side.mu = &op.domain.measure;
  side.pool = &pool;
  side.eta = &eta;

  auto rebuild_phi = [&]() {
    for (std::size_t r = 0; r < cert.cuts.size(); ++r) {
      phi_rows[r].resize(pool.size());
      for (std::size_t k = 0; k < pool.size(); ++k)
        phi_rows[r][k] = cp * pool_phi(pool[k], cert.cuts[r], mu, p);
    }
  };

  const char* grade = "multistart";
  bool certified = false;
  for (int round = 0; round < opts.max_cut_rounds; ++round) {
    OracleKind kind = pick_oracle(op, p, side.coordinate_decomposable());
    auto out = run_oracle(kind, op, ew, p, side, hset, cert.cuts, opts,
                          static_cast<std::uint64_t>(round) + 5000);
    grade = out.grade;
    if (!out.violated) {
      certified = out.certified;
      break;
    }
    const auto& f = out.cut;
    if (duplicate_cut(cert.cuts, f)) break;  // stalled
    cert.cuts.push_back(f);
    {
      auto tf = op.apply(f);
      rhs_rows.push_back(kernels::weighted_pow_sum(tf.data(), ew.data(), tf.size(), p));
    }
    phi_rows.emplace_back();
    // adaptive pool growth with the cut's norming functional
    if (opts.pool_growth && pool.size() < 4 * n + 16) {
      auto nf = norming_functional(op.domain, f);
      bool dup = false;
      for (const auto& x : pool) {
        double num = std::fabs(dot(x, nf));
        double den = norm2(x) * norm2(nf);
        if (den > 0.0 && num / den > 1.0 - 1e-10) dup = true;
      }
      if (!dup) {
        pool.push_back(std::move(nf));
        eta.resize(pool.size(), 0.0);
      }
    }
    rebuild_phi();
    auto master = solve_pietsch_master(phi_rows, rhs_rows, pool.size(), opts);
    if (!master.feasible) {
      result.status = SynthesisStatus::Infeasible;
      result.infeasibility_cuts = cert.cuts;
      return result;
    }
    eta = master.eta;
    eta.resize(pool.size(), 0.0);
  }

  cert.support = pool;
  cert.eta = eta;
  cert.route = grade;
  cert.certified = certified;
  cert.residual =
      batch_residual(op, ew, p, side, opts.verify_batch / 4, opts.seed + 29, cert.cuts);
  result.certificate = std::move(cert);
  result.status = certified ? SynthesisStatus::Feasible : SynthesisStatus::Unknown;
  return result;
}

MinConstantPietschResult min_constant_pietsch(const OperatorModel& op, double p,
                                              std::span<const double> y_star, double tol,
                                              int pool_size,
                                              const SynthesisOptions& opts,
                                              double lower_hint) {
  op.validate();
  auto pool = coordinate_pool(op.domain);
  if (pool_size > 0 && static_cast<std::size_t>(pool_size) < pool.size())
    pool.resize(static_cast<std::size_t>(pool_size));

  // certified crude cap: Minkowski column bound against the coordinate pool
  const std::size_t n = op.cols();
  auto ew = codomain_eweights(op, y_star);
  double crude = 0.0;
  for (std::size_t j = 0; j < n && j < pool.size(); ++j) {
    std::vector<double> col(op.rows());
    for (std::size_t i = 0; i < op.rows(); ++i) col[i] = op.matrix.at(i, j);
    double beta =
        std::pow(kernels::weighted_pow_sum(col.data(), ew.data(), col.size(), p), 1.0 / p);
    double rj = 1.0 / (pool[j][j] * op.domain.measure.masses[j]);
    crude += beta * rj;
  }
  crude = std::max(crude, 1e-12);

  double lo = std::max(0.0, lower_hint * (1.0 - 1e-9));
  double hi = std::max(crude * (1.0 + 1e-9), lo);
  double emp_hi = hi;
  MinConstantPietschResult out;
  auto attempt = [&](double c) {
    SynthesisOptions o = opts;
    o.seed = opts.seed + 211;
    // a fixed pool keeps the certified constant comparable with lower
    // estimates computed against the same pool
    o.pool_growth = false;
    return synthesize_pietsch_measure(op, p, y_star, c, pool, o);
  };
  for (int it = 0; it < 40 && (hi - lo) > tol * std::max(1.0, lo); ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= 0.0) break;
    auto r = attempt(mid);
    if (r.status == SynthesisStatus::Feasible) {
      hi = mid;
      emp_hi = std::min(emp_hi, mid);
    } else if (r.status == SynthesisStatus::Infeasible) {
      lo = mid;
    } else {
      emp_hi = std::min(emp_hi, mid);
      lo = mid;
    }
  }
  out.constant = hi;
  out.empirical_constant = std::min(emp_hi, hi);
  double c = hi * (1.0 + 0.1 * tol);
  auto fin = attempt(c);
  for (int k = 0; k < 6 && fin.status != SynthesisStatus::Feasible; ++k) {
    c *= 1.0 + tol;  // numerical edge at the boundary: step the constant up
    fin = attempt(c);
  }
  out.constant = c;
  out.certified = fin.status == SynthesisStatus::Feasible;
  out.certificate = fin.certificate;
  return out;
}

// ---------------------------------------------------------------------------
// verification
// ---------------------------------------------------------------------------

CertificateAudit verify_domination(const OperatorModel& op,
                                   const DominationCertificate& cert,
                                   std::uint64_t seed, int batch) {
  op.validate();
  CertificateAudit audit;
  const double p = cert.p;

  auto ball = power_dual_ball(op.domain, p);
  if (cert.z_star.size() != op.cols() || !ball.contains(cert.z_star, 1e-8)) {
    audit.residual = 1.0;
    audit.method = "membership";
    return audit;
  }
  for (double v : cert.z_star)
    if (v < -1e-12) {
      audit.residual = 1.0;
      audit.method = "membership";
      return audit;
    }

  DominatingSide side;
  side.cp = std::pow(cert.constant, p);
  side.p = p;
  side.mu = &op.domain.measure;
  side.z = cert.z_star;
  auto ew = codomain_eweights(op, cert.y_star);

  double residual = batch_residual(op, ew, p, side, batch, seed, cert.cuts);
  audit.method = "batch";

  if (p == 2.0 && op.domain.exponent == 2.0) {
    auto out = eigen_oracle(op, ew, side, 1e-11);
    audit.method = "eigen";
    if (out.violated) residual = std::max(residual, 1e-6);
  } else if (entrywise_nonneg(op.matrix)) {
    SynthesisOptions o;
    auto hset = PowerBall::from(op.domain, p);
    auto out = concave_oracle(op, ew, p, side, hset, o);
    audit.method = "concave";
    if (out.violated) residual = std::max(residual, 1e-6);
  }

  audit.residual = residual;
  audit.pass = residual <= 1e-8;
  return audit;
}

CertificateAudit verify_pietsch(const OperatorModel& op, const PietschCertificate& cert,
                                std::uint64_t seed, int batch) {
  op.validate();
  CertificateAudit audit;
  const double p = cert.p;
  double s = 0.0;
  for (double v : cert.eta) {
    if (v < -1e-15) {
      audit.method = "membership";
      audit.residual = 1.0;
      return audit;
    }
    s += v;
  }
  if (std::fabs(s - 1.0) > 1e-12) {
    audit.method = "membership";
    audit.residual = std::fabs(s - 1.0);
    return audit;
  }
  auto dual = kothe_dual_space(op.domain);
  for (const auto& x : cert.support) {
    if (norm_eval(dual, x) > 1.0 + 1e-8) {
      audit.method = "membership";
      audit.residual = 1.0;
      return audit;
    }
  }

  DominatingSide side;
  side.cp = std::pow(cert.constant, p);
  side.p = p;
  side.mu = &op.domain.measure;
  side.pool = &cert.support;
  side.eta = &cert.eta;
  auto ew = codomain_eweights(op, cert.y_star);

  double residual = batch_residual(op, ew, p, side, batch, seed, cert.cuts);
  audit.method = "batch";
  OracleKind kind = pick_oracle(op, p, side.coordinate_decomposable());
  if (kind != OracleKind::Multistart) {
    SynthesisOptions o;
    auto hset = PowerBall::from(op.domain, p);
    auto out = run_oracle(kind, op, ew, p, side, hset, cert.cuts, o, 0);
    audit.method = out.grade;
    if (out.violated) residual = std::max(residual, 1e-6);
  }
  audit.residual = residual;
  audit.pass = residual <= 1e-8;
  return audit;
}

// ---------------------------------------------------------------------------
// factorizations
// ---------------------------------------------------------------------------

namespace {

// exact norm of a formal identity (selection matrix) between weighted lp scales
double inclusion_norm_exact(const OperatorModel& inc) {
  const auto& x = inc.domain;
  const auto& y = inc.codomain;
  const double q = x.exponent;
  const double pp = y.exponent;
  auto source_atom = [&](std::size_t r) {
    for (std::size_t c = 0; c < inc.cols(); ++c)
      if (inc.matrix.at(r, c) != 0.0) return c;
    return std::size_t{0};
  };
  if (is_inf(q)) {
    double s = 0.0;
    for (std::size_t r = 0; r < inc.rows(); ++r) {
      std::size_t j = source_atom(r);
      s += y.weight[r] * y.measure.masses[r] * std::pow(1.0 / x.weight[j], pp);
    }
    return std::pow(s, 1.0 / pp);
  }
  double rr = q / pp;
  if (rr <= 1.0 + 1e-14) {
    double best = 0.0;
    for (std::size_t r = 0; r < inc.rows(); ++r) {
      std::size_t j = source_atom(r);
      double num = y.weight[r] * y.measure.masses[r];
      double den = x.weight[j] * x.measure.masses[j];
      best = std::max(best, std::pow(num / den, 1.0 / pp));
    }
    return best;
  }
  double rc = rr / (rr - 1.0);
  double s = 0.0;
  for (std::size_t r = 0; r < inc.rows(); ++r) {
    std::size_t j = source_atom(r);
    double num = y.weight[r] * y.measure.masses[r];
    double den = x.weight[j] * x.measure.masses[j];
    s += std::pow(num / den, rc) * den;
  }
  return std::pow(s, 1.0 / (rc * pp));
}

}  // namespace

FactorizationRecord factor_through_weighted_lp(const OperatorModel& op, double p,
                                               std::span<const double> y_star,
                                               const DominationCertificate& cert,
                                               std::uint64_t seed) {
  op.validate();
  const std::size_t n = op.cols();
  const std::size_t m = op.rows();

  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < n; ++j)
    if (cert.z_star[j] > 0.0) kept.push_back(j);
  if (kept.empty()) throw std::invalid_argument("synthesized weight is identically zero");

  std::vector<std::size_t> kept_cod;
  for (std::size_t i = 0; i < m; ++i)
    if (y_star[i] > 0.0) kept_cod.push_back(i);
  if (kept_cod.empty())
    throw std::invalid_argument("codomain functional is identically zero");

  MeasureSpace mu_mid{std::vector<double>()};
  std::vector<double> w_mid;
  for (std::size_t j : kept) {
    mu_mid.masses.push_back(op.domain.measure.masses[j]);
    w_mid.push_back(cert.z_star[j]);
  }
  auto mid = SpaceDescriptor::lp(p, mu_mid, w_mid);

  MeasureSpace mu_end{std::vector<double>()};
  std::vector<double> w_end;
  for (std::size_t i : kept_cod) {
    mu_end.masses.push_back(op.codomain.measure.masses[i]);
    w_end.push_back(y_star[i]);
  }
  auto end = SpaceDescriptor::lp(p, mu_end, w_end);

  FactorizationRecord rec;
  rec.kept_atoms = kept;

  OperatorModel inc1{Matrix(kept.size(), n), op.domain, mid};
  for (std::size_t r = 0; r < kept.size(); ++r) inc1.matrix.at(r, kept[r]) = 1.0;

  OperatorModel tmid{Matrix(kept_cod.size(), kept.size()), mid, end};
  for (std::size_t r = 0; r < kept_cod.size(); ++r)
    for (std::size_t c2 = 0; c2 < kept.size(); ++c2)
      tmid.matrix.at(r, c2) = op.matrix.at(kept_cod[r], kept[c2]);

  OperatorModel inc2{Matrix(kept_cod.size(), m), op.codomain, end};
  for (std::size_t r = 0; r < kept_cod.size(); ++r) inc2.matrix.at(r, kept_cod[r]) = 1.0;

  rec.inclusion_norms.push_back(inclusion_norm_exact(inc1));
  rec.inclusion_norms.push_back(inclusion_norm_exact(inc2));

  Rng rng = Rng(seed).child("factorization");
  double worst = 0.0;
  for (int trial = 0; trial < 256; ++trial) {
    auto f = rng.gaussian_vector(n);
    double nf = norm_eval(op.domain, f);
    if (nf == 0.0) continue;
    auto via = tmid.apply(inc1.apply(f));
    auto direct = inc2.apply(op.apply(f));
    std::vector<double> diff(via.size());
    for (std::size_t i = 0; i < via.size(); ++i) diff[i] = via[i] - direct[i];
    worst = std::max(worst, norm_eval(end, diff) / nf);
  }
  rec.reconstruction_residual = worst;
  rec.stages = {std::move(inc1), std::move(tmid), std::move(inc2)};
  return rec;
}

FactorizationRecord composition_through_lp(const OperatorModel& s0,
                                           const OperatorModel& t0,
                                           const OperatorModel& r0, double p,
                                           const SynthesisOptions& opts) {
  s0.validate();
  t0.validate();
  r0.validate();
  if (s0.rows() != t0.cols() || t0.rows() != r0.cols())
    throw std::invalid_argument("composition stages do not chain");
  if (std::fabs(t0.codomain.exponent - p) > 1e-12)
    throw std::invalid_argument("middle stage must land in an exponent-p space");

  auto ball = power_dual_ball(t0.codomain, p);
  auto y_top = ball.box_max();
  auto mc = min_constant_domination(t0, p, y_top, 1e-6, opts);
  auto z = mc.certificate.z_star;

  const std::size_t n = t0.cols();
  const std::size_t m = t0.rows();
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < n; ++j)
    if (z[j] > 0.0) kept.push_back(j);
  if (kept.empty()) {
    // identically zero middle stage: keep one atom with a unit multiplier so
    // the chain degenerates to the zero factorization
    kept.push_back(0);
    z[0] = 1.0;
  }

  MeasureSpace mu1{std::vector<double>()};
  for (std::size_t j : kept) mu1.masses.push_back(t0.domain.measure.masses[j]);
  auto lp1 = SpaceDescriptor::lp(p, mu1);
  auto lp2 = SpaceDescriptor::lp(p, t0.codomain.measure);

  OperatorModel s1{Matrix(kept.size(), s0.cols()), s0.domain, lp1};
  for (std::size_t r = 0; r < kept.size(); ++r) {
    double mlt = std::pow(z[kept[r]], 1.0 / p);
    for (std::size_t c2 = 0; c2 < s0.cols(); ++c2)
      s1.matrix.at(r, c2) = mlt * s0.matrix.at(kept[r], c2);
  }
  OperatorModel t1{Matrix(m, kept.size()), lp1, lp2};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t r = 0; r < kept.size(); ++r)
      t1.matrix.at(i, r) = std::pow(y_top[i], 1.0 / p) * t0.matrix.at(i, kept[r]) /
                           std::pow(z[kept[r]], 1.0 / p);
  OperatorModel r1{Matrix(r0.rows(), m), lp2, r0.codomain};
  for (std::size_t i = 0; i < r0.rows(); ++i)
    for (std::size_t j = 0; j < m; ++j)
      r1.matrix.at(i, j) = r0.matrix.at(i, j) / std::pow(y_top[j], 1.0 / p);

  FactorizationRecord rec;
  rec.kept_atoms = kept;
  rec.inclusion_norms.push_back(operator_norm_upper(t1));

  Rng rng = Rng(opts.seed).child("mr_pipeline");
  double worst = 0.0;
  for (int trial = 0; trial < 256; ++trial) {
    auto f = rng.gaussian_vector(s0.cols());
    double nf = norm_eval(s0.domain, f);
    if (nf == 0.0) continue;
    auto via = r1.apply(t1.apply(s1.apply(f)));
    auto direct = r0.apply(t0.apply(s0.apply(f)));
    std::vector<double> diff(via.size());
    for (std::size_t i = 0; i < via.size(); ++i) diff[i] = via[i] - direct[i];
    worst = std::max(worst, norm_eval(r0.codomain, diff) / nf);
  }
  rec.reconstruction_residual = worst;
  rec.stages = {std::move(s1), std::move(t1), std::move(r1)};
  return rec;
}

double p_dominated_check(const OperatorModel& op, double p, int trials,
                         std::uint64_t seed) {
  op.validate();
  const double pc = conjugate_exponent(p);
  const std::size_t n = op.cols();
  const std::size_t m = op.rows();
  Rng rng = Rng(seed).child("pdominated");

  // weak family norm: exact for inf-exponent spaces (coordinate extremes),
  // otherwise the lattice upper bound; either way the returned ratio stays a
  // valid lower bound for the bilinear summing constant.
  auto weak_norm = [&](const SpaceDescriptor& space,
                       const std::vector<std::vector<double>>& fam, double r) {
    if (is_inf(space.exponent)) {
      double best = 0.0;
      for (std::size_t j = 0; j < space.dim(); ++j) {
        double s = 0.0;
        for (const auto& x : fam) s += std::pow(std::fabs(x[j]) * space.weight[j], r);
        best = std::max(best, std::pow(s, 1.0 / r));
      }
      return best;
    }
    std::vector<double> sq(space.dim(), 0.0);
    for (const auto& x : fam)
      for (std::size_t j = 0; j < space.dim(); ++j)
        sq[j] += std::pow(std::fabs(x[j]), r);
    for (auto& v : sq) v = std::pow(v, 1.0 / r);
    return norm_eval(space, sq);
  };

  auto dualspace = kothe_dual_space(op.codomain);
  double best = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::size_t k = 1 + rng.uniform_index(4);
    std::vector<std::vector<double>> xs, ys;
    for (std::size_t i = 0; i < k; ++i) {
      xs.push_back(rng.gaussian_vector(n));
      ys.push_back(rng.gaussian_vector(m));
    }
    double num = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      auto tx = op.apply(xs[i]);
      double s = 0.0;
      for (std::size_t a = 0; a < m; ++a)
        s += tx[a] * ys[i][a] * op.codomain.measure.masses[a];
      num += std::fabs(s);
    }
    double d1 = weak_norm(op.domain, xs, p);
    double d2 = weak_norm(dualspace, ys, pc);
    if (d1 <= 0.0 || d2 <= 0.0) continue;
    best = std::max(best, num / (d1 * d2));
  }
  return best;
}

}  // namespace weightforge
