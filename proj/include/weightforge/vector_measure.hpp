#pragma once
// Vector measures over finite atom sets: the family measure collecting
// integrals against a weight set, the operator measure collecting indicator
// images, sup-over-family norms, conjugate weight synthesis with replay,
// positively norming audits, kernel ingestion and the minimal-mass witness
// for the stable-embedding obstruction.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "weightforge/operator.hpp"
#include "weightforge/synthesis.hpp"

namespace weightforge {

struct WeightFamily {
  MeasureSpace base;
  std::vector<std::vector<double>> members;  // nonnegative, one row per weight

  void validate() const;
  std::size_t size() const { return members.size(); }
  std::vector<double> member_l1_norms() const;  // integral of each member
  double sup_l1() const;
};

enum class VmCodomain {
  WeightedSpace,  // values live in a space descriptor
  FamilySup,      // values are functions, normed by sup over the family
  FamilyTuple,    // values are tuples indexed by the family, sup-normed
};

struct VectorMeasureModel {
  std::size_t source_atoms = 0;
  std::vector<std::vector<double>> atom_values;  // m({j})
  VmCodomain kind = VmCodomain::WeightedSpace;
  SpaceDescriptor codomain_space;  // used by WeightedSpace
  WeightFamily family;             // used by FamilySup / FamilyTuple
  double family_p = 1.0;           // exponent for FamilySup value norms
  MeasureSpace control;            // nu over the source atoms
  std::vector<double> control_density;  // h_phi, zero exactly on m-null atoms

  std::vector<double> set_value(const std::vector<std::size_t>& atoms) const;
  double value_norm(std::span<const double> value) const;
};

// m_V({j}) = (v_j mu_j)_{v in V}, valued in the family tuple space.
VectorMeasureModel family_vector_measure(const WeightFamily& family);

// sup over members of the weighted p-norm; exact finite maximum.
double family_lp_norm(std::span<const double> f, double p, const WeightFamily& family);

// m_T(A) = T(indicator of A); codomain taken from the operator, or normed
// against the family target when one is supplied.
VectorMeasureModel operator_vector_measure(const OperatorModel& op);
VectorMeasureModel operator_vector_measure(const OperatorModel& op,
                                           const WeightFamily& family, double p);

struct TailCheck {
  bool pass = false;
  std::vector<double> tails;
};

// tail norms of a supplied disjoint sequence; must decrease to exactly zero.
TailCheck countable_additivity_check(const VectorMeasureModel& m,
                                     const std::vector<std::vector<std::size_t>>& sets);

struct L1mEstimate {
  double lower = 0.0;
  std::string note;  // "exact_positive" | "exact_enumerated" | "sampled"
};

// ||f||_{L1(m)} = sup over dual functionals of sum_j |f_j| |<m_j, x*>|;
// exact by sign enumeration for few atoms or positive measures.
L1mEstimate l1_vm_norm(std::span<const double> f, const VectorMeasureModel& m,
                       const std::vector<std::vector<double>>& dual_pool, int budget,
                       std::uint64_t seed);

struct ConjugatePair {
  std::size_t member = 0;
  std::vector<double> nu_weight;   // w_v as a density against the control measure
  std::vector<double> functional;  // w_v / h_phi on the non-null atoms
  double constant = 0.0;
  double inclusion_norm = 0.0;  // norm of X -> L^p(w dnu)
  double verified = 0.0;        // multistart check of the weighted pair
  bool certified = false;
};

struct ConjugateFamilyReport {
  bool conjugable = true;
  double uniform_constant = 0.0;
  double inclusion_bound = 0.0;
  std::vector<ConjugatePair> assignment;
  std::size_t failed_member = static_cast<std::size_t>(-1);
  std::vector<double> witness;  // infeasibility cut when not conjugable
};

// Per-member dominating-weight synthesis at y* = v (the top corner of each
// member target). A fixed constant may be requested; otherwise the least
// certified constant per member is found and the maximum reported.
ConjugateFamilyReport conjugate_family_synthesize(
    const OperatorModel& op, const WeightFamily& family, double p, double tol,
    std::uint64_t seed, std::optional<double> required_constant = {},
    const std::vector<double>* control_density = nullptr,
    const SynthesisOptions& opts = {});

// Replays the square-function inequality through the assignment on random
// families; returns the worst observed ratio (should stay <= C).
double conjugate_family_replay(const OperatorModel& op, const WeightFamily& family,
                               const ConjugateFamilyReport& report, double p,
                               int batch, std::uint64_t seed);

struct PthPowerCheck {
  double factorability_lower = 0.0;  // sup ||Tf|| / || |f|^{1/p} ||^p
  double inclusion_lower = 0.0;      // sup ||f||_{L^p(m_T)} / ||f||_X (sampled)
};

PthPowerCheck pth_power_factorable_check(const OperatorModel& op,
                                         const SpaceDescriptor& x, double p,
                                         int budget, std::uint64_t seed);

struct NormingConstants {
  double c1 = 0.0;  // lower equivalence constant (upper bound of the true one)
  bool c1_exact = false;
  double c2 = 0.0;  // exact upper equivalence constant
  bool positively_norming = false;
  double sign_identity_residual = 0.0;
};

NormingConstants positively_norming_constants(
    const std::vector<std::vector<double>>& weights, const SpaceDescriptor& x,
    int budget, std::uint64_t seed);

struct ConjugatePipelineReport {
  std::vector<double> control_density;
  PthPowerCheck pth;
  ConjugateFamilyReport conjugate;
  double replay_ratio = 0.0;
  NormingConstants audit;
  double dual_box_bound = 0.0;  // observed K with W inside K B_{X'}
};

// Full chain: operator measure, control density, factorability check,
// per-member synthesis, replay, and the positively norming audit.
ConjugatePipelineReport conjugate_family_pipeline(const OperatorModel& op,
                                                  const SpaceDescriptor& x,
                                                  const WeightFamily& family, double p,
                                                  double tol, std::uint64_t seed,
                                                  const SynthesisOptions& opts = {});

struct KernelModel {
  OperatorModel op;
  VectorMeasureModel measure;
};

// Quadrature discretization of f -> integral of f(x) K(x, .) dx with the
// x-masses as weights; the value grid is indexed [x_atom][y_atom].
KernelModel kernel_vector_measure(const std::vector<std::vector<double>>& grid,
                                  const MeasureSpace& x_measure,
                                  const MeasureSpace& y_measure,
                                  const WeightFamily& family, double p);

struct EmbeddingConstants {
  double k1 = 0.0;  // lower embedding constant
  double c2 = 0.0;  // continuity constant of the hypothetical extension
  double c1 = 0.0;  // inclusion constant (recorded, not used by the cuts)
};

struct StableEmbeddingResult {
  std::size_t atoms = 0;
  double minimal_mass = 0.0;  // LP value over the necessity cuts
  EmbeddingConstants constants;
  bool degraded_to_gaussian = false;
  int sample_dim = 0;
  double bracket_spread = 0.0;  // (c2 - k1)/k1 of the sampled embedding
};

// Finite model of the q-stable embedding on n atoms (n a power of two);
// minimizes the total mass of a conjugate weight subject to the indicator
// necessity cuts. The minimal mass grows like n^{1 - p/q}.
StableEmbeddingResult stable_embedding_mass_witness(
    std::size_t n, double p, double q, std::optional<EmbeddingConstants> constants,
    std::uint64_t seed);

// least-squares slope of log(y) against log(x)
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace weightforge
