#pragma once
// Finite measure spaces and weighted-lp space descriptors, with closed-form
// norm, p-th power and Koethe dual computations. All pairings are taken
// against the base measure: <f,g> = sum_i f_i g_i mu_i.

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace weightforge {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_inf(double p) { return p == kInf; }

// Hoelder conjugate: 1 <-> inf, p <-> p/(p-1).
double conjugate_exponent(double p);

struct MeasureSpace {
  std::vector<double> masses;

  std::size_t atom_count() const { return masses.size(); }
  double total_mass() const;
  void validate() const;

  static MeasureSpace uniform(std::size_t n, double total = -1.0);
};

bool same_measure(const MeasureSpace& a, const MeasureSpace& b, double tol = 0.0);

// Nonnegative weight vector; zero entries allowed (family members), strict
// positivity is required only where a SpaceDescriptor is formed.
struct WeightVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool strictly_positive() const;
  void validate() const;  // nonnegative entries
};

// Norm (sum_i |f_i|^p a_i mu_i)^(1/p), or max_i a_i |f_i| for p = inf.
struct SpaceDescriptor {
  MeasureSpace measure;
  double exponent = 2.0;  // >= 1 or kInf
  std::vector<double> weight;

  std::size_t dim() const { return measure.atom_count(); }
  void validate() const;

  static SpaceDescriptor lp(double p, MeasureSpace measure);
  static SpaceDescriptor lp(double p, MeasureSpace measure, std::vector<double> weight);
};

double norm_eval(const SpaceDescriptor& space, std::span<const double> f);

// Seminorm with an arbitrary nonnegative weight vector (zeros allowed).
double lp_seminorm(std::span<const double> f, std::span<const double> weight,
                   const MeasureSpace& measure, double p);

// X_[p]: same measure/weight, exponent q/p (q >= p required); for q = inf the
// exponent stays inf and the weight is raised to the p-th power.
SpaceDescriptor pth_power_space(const SpaceDescriptor& space, double p);

// Closed-form Koethe dual under the mu-pairing.
SpaceDescriptor kothe_dual_space(const SpaceDescriptor& space);

struct DualBallDescriptor {
  SpaceDescriptor dual_space;

  bool is_box() const;  // true iff the primal space has exponent 1
  std::vector<double> box_max() const;
  double dual_norm(std::span<const double> g) const;
  bool contains(std::span<const double> g, double tol = 1e-9) const;
  std::vector<double> project(std::span<const double> g) const;
};

DualBallDescriptor kothe_dual_ball(const SpaceDescriptor& space);

// Dual ball of X_[p]; the feasible region for synthesized weights.
DualBallDescriptor power_dual_ball(const SpaceDescriptor& space, double p);

// g in B_{X'} with <f,g> = ||f||_X; deterministic tie-breaks.
std::vector<double> norming_functional(const SpaceDescriptor& space,
                                       std::span<const double> f);

// Randomized lower bound for the p-convexity constant M_(p)(X).
double p_convexity_lower_bound(const SpaceDescriptor& space, double p, int budget,
                               std::uint64_t seed);

}  // namespace weightforge
