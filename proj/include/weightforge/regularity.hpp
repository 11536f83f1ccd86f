#pragma once
// Estimation and certification of the square-function operator constants:
// rho_p (families measured in the domain lattice) and lambda_p (families
// measured against a pool of dual functionals). Lower bounds come from
// multistart ascent over vector families and are certified by their
// witnesses; upper bounds come from the synthesis bisections.

#include <cstdint>
#include <optional>
#include <vector>

#include "weightforge/synthesis.hpp"

namespace weightforge {

struct WitnessFamily {
  double value = 0.0;
  std::vector<std::vector<double>> vectors;
};

// sup ||(sum |T x_i|^p)^{1/p}|| / ||(sum |x_i|^p)^{1/p}|| over families of the
// given size; valid lower bound for rho_p, witness attains the value.
WitnessFamily rho_lower(const OperatorModel& op, double p, int family_size,
                        int budget, std::uint64_t seed);

struct UpperEstimate {
  std::optional<double> certified;  // nullopt = unknown
  double empirical = 0.0;           // bisection on "no violation found"
  std::string route;
};

struct RhoUpperResult {
  UpperEstimate upper;
  DominationCertificate certificate;
};

// Bisection at the top-corner codomain functional; requires the codomain to
// be an exponent-p space so that the corner covers the whole dual ball.
RhoUpperResult rho_upper(const OperatorModel& op, double p, double tol,
                         const SynthesisOptions& opts = {});

// Pool-relative weak norm: max over pool functionals x' of
// (sum_i |<x_i,x'>|^p)^{1/p}. For sup-normed domains the coordinate pool is
// exactly the extreme-point set, so the value is the true weak-lp norm.
double weak_pool_norm(const std::vector<std::vector<double>>& family,
                      const MeasureSpace& mu, double p,
                      const std::vector<std::vector<double>>& pool);

// Lower bound for lambda_p relative to the given pool (default: normalized
// coordinate functionals). Never below rho_lower on the same family.
WitnessFamily lambda_lower(const OperatorModel& op, double p, int family_size,
                           int budget, std::uint64_t seed,
                           const std::vector<std::vector<double>>* pool = nullptr);

struct LambdaUpperResult {
  UpperEstimate upper;
  PietschCertificate certificate;
};

LambdaUpperResult lambda_upper(const OperatorModel& op, double p, int pool_size,
                               double tol, const SynthesisOptions& opts = {});

// 1.783 * certified operator-norm upper bound; a sound 2-regularity constant
// for any operator between these lattices.
double two_regular_crude_bound(const OperatorModel& op);

}  // namespace weightforge
