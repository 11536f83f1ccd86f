#pragma once
// Dominating-weight synthesis via cutting planes over the power-dual ball,
// Pietsch-measure synthesis over the probability simplex, and factorization
// builders driven by the resulting certificates.
//
// Separation oracles come in three grades:
//   - exact: eigenvalue test (p=2 on exponent-2 domains), concave
//     maximization with a duality-gap stop (entrywise nonnegative operators),
//     or coordinatewise closed forms (diagonal operators).
//   - positive majorant: a certificate synthesized for |T| (valid for T,
//     possibly not tight).
//   - empirical: multistart ascent found no violation; reported as Unknown,
//     never as a certificate.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "weightforge/operator.hpp"

namespace weightforge {

enum class SynthesisStatus { Feasible, Infeasible, Unknown };

struct SynthesisOptions {
  int max_cut_rounds = 120;
  int oracle_budget = 32;   // multistart restarts
  int oracle_iters = 160;   // ascent steps per restart
  int fw_max_iters = 600;
  double accept_tol = 1e-10;  // relative violation acceptance
  double lp_feas_tol = 1e-9;
  int verify_batch = 10000;
  bool pool_growth = true;  // adaptive pool augmentation in pietsch synthesis
  std::uint64_t seed = 1;
};

struct DominationCertificate {
  double p = 2.0;
  double constant = 0.0;  // C
  std::vector<double> y_star;
  std::vector<double> z_star;
  std::vector<std::vector<double>> cuts;
  double residual = 0.0;
  bool certified = false;
  std::string route;  // "eigen" | "concave" | "coordinate" | "positive_majorant" | "empirical"
};

struct SynthesisResult {
  SynthesisStatus status = SynthesisStatus::Unknown;
  DominationCertificate certificate;  // populated on Feasible; carries the
                                      // empirically unviolated weight on Unknown
  std::vector<double> infeasibility_witness;
};

SynthesisResult synthesize_dominating_weight(const OperatorModel& op, double p,
                                             std::span<const double> y_star, double c,
                                             const SynthesisOptions& opts = {});

struct MinConstantResult {
  double constant = 0.0;  // smallest certified-feasible constant
  bool certified = false;
  double empirical_constant = 0.0;  // bisection on "no violation found"
  DominationCertificate certificate;
};

MinConstantResult min_constant_domination(const OperatorModel& op, double p,
                                          std::span<const double> y_star, double tol,
                                          const SynthesisOptions& opts = {},
                                          double lower_hint = 0.0);

struct PietschCertificate {
  double p = 2.0;
  double constant = 0.0;
  std::vector<double> y_star;
  std::vector<std::vector<double>> support;  // pool functionals
  std::vector<double> eta;                   // probabilities over the pool
  std::vector<std::vector<double>> cuts;
  double residual = 0.0;
  bool certified = false;
  std::string route;
};

struct PietschResult {
  SynthesisStatus status = SynthesisStatus::Unknown;
  PietschCertificate certificate;
  std::vector<std::vector<double>> infeasibility_cuts;
};

// Pool functionals act through the domain measure: <f,x'> = sum f x' mu.
PietschResult synthesize_pietsch_measure(const OperatorModel& op, double p,
                                         std::span<const double> y_star, double c,
                                         std::vector<std::vector<double>> pool,
                                         const SynthesisOptions& opts = {});

struct MinConstantPietschResult {
  double constant = 0.0;
  bool certified = false;
  double empirical_constant = 0.0;
  PietschCertificate certificate;
};

MinConstantPietschResult min_constant_pietsch(const OperatorModel& op, double p,
                                              std::span<const double> y_star, double tol,
                                              int pool_size,
                                              const SynthesisOptions& opts = {},
                                              double lower_hint = 0.0);

// Normalized coordinate functionals of the domain's dual; the default pool.
std::vector<std::vector<double>> coordinate_pool(const SpaceDescriptor& domain);

struct CertificateAudit {
  bool pass = false;
  double residual = 0.0;
  std::string method;  // "eigen" | "concave" | "batch"
};

CertificateAudit verify_domination(const OperatorModel& op,
                                   const DominationCertificate& cert,
                                   std::uint64_t seed, int batch = 10000);
CertificateAudit verify_pietsch(const OperatorModel& op, const PietschCertificate& cert,
                                std::uint64_t seed, int batch = 10000);

struct FactorizationRecord {
  std::vector<OperatorModel> stages;  // applied left to right
  std::vector<double> inclusion_norms;
  double reconstruction_residual = 0.0;
  std::vector<std::size_t> kept_atoms;  // middle-space atoms retained
};

// X -> L^p(z* dmu1) -> L^p(y* dmu2) with Y -> L^p(y* dmu2), checked by a
// reconstruction residual in the final space.
FactorizationRecord factor_through_weighted_lp(const OperatorModel& op, double p,
                                               std::span<const double> y_star,
                                               const DominationCertificate& cert,
                                               std::uint64_t seed);

// S1 = M_{z*^{1/p}} S0, T1 between plain weighted l^p spaces, R1 = R0 M_{y*^{-1/p}};
// composite equals R0 T0 S0 on the retained atoms.
FactorizationRecord composition_through_lp(const OperatorModel& s0,
                                           const OperatorModel& t0,
                                           const OperatorModel& r0, double p,
                                           const SynthesisOptions& opts = {});

// Empirical lower bound for the bilinear summing constant.
double p_dominated_check(const OperatorModel& op, double p, int trials,
                         std::uint64_t seed);

}  // namespace weightforge
