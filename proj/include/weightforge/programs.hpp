#pragma once
// Composite weight programs built on the synthesis engine: the geometric
// endomorphism iteration g_{i+1} = synthesized weight at y* = g_i, the
// square-exponent weight for operators on an L^p scale, and the all-exponent
// weight for regular operators with interpolation endpoints.

#include <cstdint>
#include <vector>

#include "weightforge/synthesis.hpp"

namespace weightforge {

struct EndoStep {
  std::vector<double> weight;
  bool certified = false;
  std::string route;
  double residual = 0.0;
};

struct EndoWeightReport {
  double p = 2.0;
  double constant = 0.0;    // C fed to the chain
  int truncation = 40;      // N
  double tail_bound = 0.0;  // contribution of the truncated tail (and mix)
  double certified_constant = 0.0;  // 2^{1/p} C (1+tail)^{1/p}
  std::vector<double> g;            // strictly positive, ||g||_{(X_[p])'} <= 1
  std::vector<EndoStep> steps;      // g_0 .. g_{N+1}
  bool all_steps_certified = false;
  bool epsilon_mix_applied = false;
  double chain_residual = 0.0;   // fresh-batch residual of the summed inequality
  double verified_norm = 0.0;    // ||T~||_{L^p(g)} (exact at p == 2)
  bool verified_exact = false;
};

// pre: domain == codomain; C certified >= rho_p(T). Runs N+1 synthesis steps
// so the truncated tail is bounded by the last synthesized weight.
EndoWeightReport endomorphism_weight(const OperatorModel& op, double p, double c,
                                     int truncation, std::uint64_t seed,
                                     const SynthesisOptions& opts = {});

struct L2WeightReport {
  bool via_adjoint = false;
  double constant = 0.0;  // the exponent-2 chain constant actually used
  EndoWeightReport endo;
  std::vector<double> g;       // weight making T bounded on the g-weighted l2 space
  double verified_norm = 0.0;  // exact weighted spectral norm of T on it
  double target_bound = 0.0;   // sqrt(2) C (1+tail)^{1/2}
};

// Operators on a weighted L^p scale: run the exponent-2 chain (on the adjoint
// when p < 2) and verify the induced square-exponent bound exactly.
L2WeightReport l2_weight_program(const OperatorModel& op, std::uint64_t seed,
                                 int truncation = 40,
                                 const SynthesisOptions& opts = {});

struct AllExponentReport {
  std::vector<double> g;  // mixed weight, strictly positive
  double m1 = 0.0;        // exact norm on the weight-1 scale endpoint
  double minf = 0.0;      // exact sup-norm endpoint (plain max row sum)
  double m1_individual = 0.0;    // endpoint constant of the direct weight alone
  double minf_weighted = 0.0;    // adjoint-side endpoint in the weighted sup norm
  double minf_individual = 0.0;  // same constant for the adjoint weight alone
  double endpoint_degradation = 0.0;  // mixed / individual, should stay <= 2
  std::vector<double> grid;
  std::vector<double> verified_lower;       // randomized norm lower bounds
  std::vector<double> interpolation_bound;  // m1^{1/p} minf^{1-1/p}
  bool all_verified = false;
};

// Regular operators (difference of positive parts): a single weight g with
// endpoint bounds at exponents 1 and infinity, checked across the grid.
AllExponentReport regular_operator_weight(const OperatorModel& op,
                                          std::vector<double> p_grid,
                                          std::uint64_t seed, int truncation = 40,
                                          const SynthesisOptions& opts = {});

struct WeightedNormCheck {
  double constant = 0.0;
  bool infeasible_direction = false;  // null weight direction escapes through T
};

// sup ||Tf||_{L^p(v)} / ||f||_{L^p(w)} by multistart; weights may carry zeros.
WeightedNormCheck weighted_norm_verify(const OperatorModel& op,
                                       const WeightVector& w, const WeightVector& v,
                                       double p, int trials, std::uint64_t seed);

}  // namespace weightforge
