#include "weightforge/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace weightforge {

LpRow& LpProblem::add_row(char relation, double rhs) {
  rows.push_back(LpRow{std::vector<double>(num_vars, 0.0), relation, rhs});
  return rows.back();
}

namespace {

struct Tableau {
  std::size_t m = 0;       // constraint rows
  std::size_t ncols = 0;   // structural + slack + artificial
  std::vector<double> t;   // (m+1) x (ncols+1); row m = objective, col ncols = rhs
  std::vector<std::size_t> basis;

  double& at(std::size_t i, std::size_t j) { return t[i * (ncols + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return t[i * (ncols + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, ncols); }

  void pivot(std::size_t row, std::size_t col) {
    const double piv = at(row, col);
    const double inv = 1.0 / piv;
    for (std::size_t j = 0; j <= ncols; ++j) at(row, j) *= inv;
    at(row, col) = 1.0;
    for (std::size_t i = 0; i <= m; ++i) {
      if (i == row) continue;
      const double f = at(i, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= ncols; ++j) at(i, j) -= f * at(row, j);
      at(i, col) = 0.0;
    }
    basis[row] = col;
  }
};

// Bland's rule: entering = smallest eligible column, leaving = lexicographic
// smallest basis index among minimal ratios.
LpStatus run_simplex(Tableau& tb, const std::vector<bool>& allowed,
                     const LpOptions& opts) {
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    std::size_t enter = tb.ncols;
    for (std::size_t j = 0; j < tb.ncols; ++j) {
      if (!allowed[j]) continue;
      if (tb.at(tb.m, j) > opts.pivot_tol) {
        enter = j;
        break;
      }
    }
    if (enter == tb.ncols) return LpStatus::Optimal;

    std::size_t leave = tb.m;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tb.m; ++i) {
      const double a = tb.at(i, enter);
      if (a <= opts.pivot_tol) continue;
      const double ratio = tb.rhs(i) / a;
      if (ratio < best_ratio - opts.pivot_tol ||
          (std::fabs(ratio - best_ratio) <= opts.pivot_tol &&
           (leave == tb.m || tb.basis[i] < tb.basis[leave]))) {
        best_ratio = ratio;
        leave = i;
      }
    }
    if (leave == tb.m) return LpStatus::Unbounded;
    tb.pivot(leave, enter);
  }
  throw std::runtime_error("simplex: iteration limit reached");
}

}  // namespace

LpSolution solve_lp(const LpProblem& p, const LpOptions& opts) {
  const std::size_t n = p.num_vars;

  // expand finite upper bounds into rows
  std::vector<LpRow> rows = p.rows;
  if (!p.upper.empty()) {
    for (std::size_t j = 0; j < n; ++j) {
      double u = p.upper[j];
      if (std::isfinite(u)) {
        LpRow r;
        r.coeffs.assign(n, 0.0);
        r.coeffs[j] = 1.0;
        r.relation = '<';
        r.rhs = u;
        rows.push_back(std::move(r));
      }
    }
  }
  const std::size_t m = rows.size();

  // count slack and artificial columns
  std::size_t num_slack = 0;
  std::size_t num_art = 0;
  for (auto& r : rows) {
    double rhs = r.rhs;
    char rel = r.relation;
    if (rhs < 0.0) rel = (rel == '<') ? '>' : (rel == '>') ? '<' : '=';
    if (rel != '=') ++num_slack;
    if (rel != '<') ++num_art;  // '>' needs surplus+artificial, '=' artificial
  }

  Tableau tb;
  tb.m = m;
  tb.ncols = n + num_slack + num_art;
  tb.t.assign((m + 1) * (tb.ncols + 1), 0.0);
  tb.basis.assign(m, 0);

  std::vector<bool> is_artificial(tb.ncols, false);
  std::size_t slack_at = n;
  std::size_t art_at = n + num_slack;

  for (std::size_t i = 0; i < m; ++i) {
    const LpRow& r = rows[i];
    double sign = (r.rhs < 0.0) ? -1.0 : 1.0;
    char rel = r.relation;
    if (sign < 0.0) rel = (rel == '<') ? '>' : (rel == '>') ? '<' : '=';
    if (r.coeffs.size() != n) throw std::invalid_argument("lp row size mismatch");
    for (std::size_t j = 0; j < n; ++j) tb.at(i, j) = sign * r.coeffs[j];
    tb.rhs(i) = sign * r.rhs;
    if (rel == '<') {
      tb.at(i, slack_at) = 1.0;
      tb.basis[i] = slack_at++;
    } else if (rel == '>') {
      tb.at(i, slack_at) = -1.0;
      ++slack_at;
      tb.at(i, art_at) = 1.0;
      is_artificial[art_at] = true;
      tb.basis[i] = art_at++;
    } else {
      tb.at(i, art_at) = 1.0;
      is_artificial[art_at] = true;
      tb.basis[i] = art_at++;
    }
  }

  std::vector<bool> allowed(tb.ncols, true);

  // Phase 1: maximize -(sum of artificials)
  if (num_art > 0) {
    for (std::size_t j = 0; j < tb.ncols; ++j) tb.at(m, j) = 0.0;
    tb.rhs(m) = 0.0;
    for (std::size_t j = n + num_slack; j < tb.ncols; ++j) tb.at(m, j) = -1.0;
    // express objective in terms of the nonbasic columns
    for (std::size_t i = 0; i < m; ++i) {
      if (!is_artificial[tb.basis[i]]) continue;
      for (std::size_t j = 0; j <= tb.ncols; ++j) tb.at(m, j) += tb.at(i, j);
    }
    LpStatus st = run_simplex(tb, allowed, opts);
    if (st == LpStatus::Unbounded) throw std::runtime_error("phase 1 unbounded");
    double art_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (is_artificial[tb.basis[i]]) art_sum += tb.rhs(i);
    if (art_sum > opts.feas_tol) {
      LpSolution sol;
      sol.status = LpStatus::Infeasible;
      return sol;
    }
    // pivot remaining artificials out where possible
    for (std::size_t i = 0; i < m; ++i) {
      if (!is_artificial[tb.basis[i]]) continue;
      std::size_t enter = tb.ncols;
      for (std::size_t j = 0; j < n + num_slack; ++j) {
        if (std::fabs(tb.at(i, j)) > opts.pivot_tol) {
          enter = j;
          break;
        }
      }
      if (enter < tb.ncols) tb.pivot(i, enter);
      // else: redundant row, artificial stays basic at zero
    }
    for (std::size_t j = 0; j < tb.ncols; ++j)
      if (is_artificial[j]) allowed[j] = false;
  }

  // Phase 2: real objective
  for (std::size_t j = 0; j <= tb.ncols; ++j) tb.at(m, j) = 0.0;
  for (std::size_t j = 0; j < n && j < p.objective.size(); ++j)
    tb.at(m, j) = p.objective[j];
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t b = tb.basis[i];
    double cb = (b < n && b < p.objective.size()) ? p.objective[b] : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j <= tb.ncols; ++j) tb.at(m, j) -= cb * tb.at(i, j);
  }

  LpStatus st = run_simplex(tb, allowed, opts);

  LpSolution sol;
  sol.status = st;
  if (st == LpStatus::Unbounded) return sol;
  sol.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (tb.basis[i] < n) sol.x[tb.basis[i]] = tb.rhs(i);
  }
  double v = 0.0;
  for (std::size_t j = 0; j < n && j < p.objective.size(); ++j)
    v += p.objective[j] * sol.x[j];
  sol.value = v;
  return sol;
}

}  // namespace weightforge
