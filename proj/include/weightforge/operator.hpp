#pragma once
// Dense matrix operators between space descriptors: application, Koethe
// adjoints, moduli, norm estimation with witnesses, and certified crude
// upper bounds used to initialise bisection brackets.

#include <cstdint>
#include <span>
#include <vector>

#include "weightforge/linalg.hpp"
#include "weightforge/space.hpp"

namespace weightforge {

struct OperatorModel {
  Matrix matrix;  // codomain.dim() x domain.dim()
  SpaceDescriptor domain;
  SpaceDescriptor codomain;

  std::size_t rows() const { return matrix.rows; }
  std::size_t cols() const { return matrix.cols; }
  void validate() const;
  std::vector<double> apply(std::span<const double> f) const;

  static OperatorModel identity(const SpaceDescriptor& space);
};

// Koethe adjoint under the mu-pairings: <Tf,g>_nu = <f,T*g>_mu, with domain
// and codomain replaced by their Koethe duals.
OperatorModel adjoint(const OperatorModel& op);

// Entrywise modulus |T| between the same spaces.
OperatorModel modulus(const OperatorModel& op);

struct OperatorNormEstimate {
  double lower = 0.0;
  std::vector<double> witness;
  bool exact = false;
};

// Certified lower bound with witness; exact for weighted-l2 -> weighted-l2
// (spectral), l1 domains (column maximum) and small l-inf domains
// (sign enumeration). Otherwise multistart projected ascent.
OperatorNormEstimate operator_norm(const OperatorModel& op, int budget,
                                   std::uint64_t seed);

// Certified upper bound from row/column Hoelder bounds plus Riesz-Thorin
// interpolation when domain and codomain exponents agree.
double operator_norm_upper(const OperatorModel& op);

// Gradient of the norm ||.||_X at f (a supergradient at kinks); zero at 0.
std::vector<double> norm_gradient(const SpaceDescriptor& space,
                                  std::span<const double> f);

// T(f) = sum_cells (integral of f over the cell) * indicator of the cell.
Matrix partition_averaging_matrix(const MeasureSpace& measure,
                                  const std::vector<std::vector<std::size_t>>& cells);

}  // namespace weightforge
