#pragma once
// Dense two-phase primal simplex with Bland's anti-cycling rule. Problems in
// this library are small (tens of variables, a few hundred rows), so a plain
// tableau is the right tool: deterministic pivots, no dependencies.

#include <cstddef>
#include <vector>

namespace weightforge {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpRow {
  std::vector<double> coeffs;
  char relation = '<';  // '<', '>', '='
  double rhs = 0.0;
};

struct LpProblem {
  std::size_t num_vars = 0;
  std::vector<double> objective;  // maximize objective . x, x >= 0
  std::vector<LpRow> rows;
  std::vector<double> upper;  // per-variable upper bounds; empty or +inf = none

  LpRow& add_row(char relation, double rhs);
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double value = 0.0;
  std::vector<double> x;
};

struct LpOptions {
  double feas_tol = 1e-9;
  double pivot_tol = 1e-12;
  int max_iters = 20000;
};

LpSolution solve_lp(const LpProblem& p, const LpOptions& opts = {});

}  // namespace weightforge
