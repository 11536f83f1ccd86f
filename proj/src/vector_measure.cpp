#include "weightforge/vector_measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "weightforge/kernels.hpp"
#include "weightforge/programs.hpp"
#include "weightforge/rng.hpp"
#include "weightforge/simplex.hpp"

namespace weightforge {

void WeightFamily::validate() const {
  base.validate();
  if (members.empty()) throw std::invalid_argument("weight family must be nonempty");
  for (const auto& v : members) {
    if (v.size() != base.atom_count())
      throw std::invalid_argument("family member size does not match the base measure");
    for (double x : v)
      if (x < 0.0 || !std::isfinite(x))
        throw std::invalid_argument("family members must be finite and nonnegative");
  }
}

std::vector<double> WeightFamily::member_l1_norms() const {
  std::vector<double> norms;
  norms.reserve(members.size());
  for (const auto& v : members) {
    double s = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) s += v[j] * base.masses[j];
    norms.push_back(s);
  }
  return norms;
}

double WeightFamily::sup_l1() const {
  double best = 0.0;
  for (double v : member_l1_norms()) best = std::max(best, v);
  return best;
}

std::vector<double> VectorMeasureModel::set_value(
    const std::vector<std::size_t>& atoms) const {
  if (atom_values.empty()) return {};
  std::vector<double> out(atom_values[0].size(), 0.0);
  for (std::size_t j : atoms) {
    if (j >= source_atoms) throw std::invalid_argument("set atom out of range");
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += atom_values[j][k];
  }
  return out;
}

double VectorMeasureModel::value_norm(std::span<const double> value) const {
  switch (kind) {
    case VmCodomain::WeightedSpace:
      return norm_eval(codomain_space, value);
    case VmCodomain::FamilySup:
      return family_lp_norm(value, family_p, family);
    case VmCodomain::FamilyTuple: {
      double best = 0.0;
      for (double v : value) best = std::max(best, std::fabs(v));
      return best;
    }
  }
  return 0.0;
}

VectorMeasureModel family_vector_measure(const WeightFamily& family) {
  family.validate();
  const std::size_t n = family.base.atom_count();
  VectorMeasureModel m;
  m.source_atoms = n;
  m.kind = VmCodomain::FamilyTuple;
  m.family = family;
  m.control = family.base;
  m.atom_values.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> val(family.size());
    for (std::size_t k = 0; k < family.size(); ++k)
      val[k] = family.members[k][j] * family.base.masses[j];
    m.atom_values[j] = std::move(val);
  }
  m.control_density.resize(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double v = m.value_norm(m.atom_values[j]);
    m.control_density[j] = v / family.base.masses[j];
    total += v;
  }
  if (total > 0.0)
    for (auto& v : m.control_density) v /= total;
  return m;
}

double family_lp_norm(std::span<const double> f, double p, const WeightFamily& family) {
  family.validate();
  if (f.size() != family.base.atom_count())
    throw std::invalid_argument("family_lp_norm: dimension mismatch");
  double best = 0.0;
  for (const auto& v : family.members)
    best = std::max(best, lp_seminorm(f, v, family.base, p));
  return best;
}

namespace {

VectorMeasureModel build_operator_measure(const OperatorModel& op) {
  op.validate();
  VectorMeasureModel m;
  m.source_atoms = op.cols();
  m.kind = VmCodomain::WeightedSpace;
  m.codomain_space = op.codomain;
  m.control = op.domain.measure;
  m.atom_values.resize(op.cols());
  for (std::size_t j = 0; j < op.cols(); ++j) {
    std::vector<double> col(op.rows());
    for (std::size_t i = 0; i < op.rows(); ++i) col[i] = op.matrix.at(i, j);
    m.atom_values[j] = std::move(col);
  }
  return m;
}

void fill_control_density(VectorMeasureModel& m) {
  const std::size_t n = m.source_atoms;
  m.control_density.assign(n, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double v = m.value_norm(m.atom_values[j]);
    m.control_density[j] = v / m.control.masses[j];  // variation density
    total += v;
  }
  // normalized so the density integrates to one against the control measure;
  // atoms with zero density are exactly the m-null ones
  if (total > 0.0)
    for (auto& v : m.control_density) v /= total;
}

}  // namespace

VectorMeasureModel operator_vector_measure(const OperatorModel& op) {
  auto m = build_operator_measure(op);
  fill_control_density(m);
  return m;
}

VectorMeasureModel operator_vector_measure(const OperatorModel& op,
                                           const WeightFamily& family, double p) {
  family.validate();
  if (family.base.atom_count() != op.rows())
    throw std::invalid_argument("family base must match the operator codomain atoms");
  auto m = build_operator_measure(op);
  m.kind = VmCodomain::FamilySup;
  m.family = family;
  m.family_p = p;
  fill_control_density(m);
  return m;
}

TailCheck countable_additivity_check(const VectorMeasureModel& m,
                                     const std::vector<std::vector<std::size_t>>& sets) {
  TailCheck out;
  const std::size_t count = sets.size();
  // disjointness of the supplied sequence
  std::vector<bool> seen(m.source_atoms, false);
  for (const auto& s : sets)
    for (std::size_t j : s) {
      if (j >= m.source_atoms || seen[j])
        throw std::invalid_argument("sets must be disjoint atom subsets");
      seen[j] = true;
    }
  out.tails.resize(count + 1);
  for (std::size_t k = 0; k <= count; ++k) {
    std::vector<std::size_t> tail;
    for (std::size_t i = k; i < count; ++i)
      tail.insert(tail.end(), sets[i].begin(), sets[i].end());
    auto val = m.set_value(tail);
    out.tails[k] = m.value_norm(val);
  }
  out.pass = out.tails.back() == 0.0;
  for (std::size_t k = 0; k + 1 <= count; ++k)
    if (out.tails[k + 1] > out.tails[k] + 1e-12) out.pass = false;
  return out;
}

L1mEstimate l1_vm_norm(std::span<const double> f, const VectorMeasureModel& m,
                       const std::vector<std::vector<double>>& dual_pool, int budget,
                       std::uint64_t seed) {
  if (f.size() != m.source_atoms)
    throw std::invalid_argument("l1_vm_norm: dimension mismatch");
  const std::size_t n = m.source_atoms;
  if (m.atom_values.empty()) return {0.0, "exact_positive"};
  const std::size_t d = m.atom_values[0].size();

  // sup over the codomain dual ball of sum_j |f_j| |<m_j, x*>| equals the
  // maximum over sign patterns of || sum_j s_j |f_j| m_j ||
  auto signed_norm = [&](const std::vector<int>& signs) {
    std::vector<double> acc(d, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double c = std::fabs(f[j]) * static_cast<double>(signs[j]);
      if (c == 0.0) continue;
      for (std::size_t k = 0; k < d; ++k) acc[k] += c * m.atom_values[j][k];
    }
    return m.value_norm(acc);
  };

  bool positive = true;
  for (const auto& val : m.atom_values)
    for (double v : val)
      if (v < 0.0) positive = false;

  L1mEstimate est;
  std::vector<int> signs(n, 1);
  est.lower = signed_norm(signs);
  if (positive) {
    est.note = "exact_positive";
  } else if (n <= 14) {
    const std::size_t patterns = std::size_t{1} << (n - 1);
    for (std::size_t mask = 1; mask < patterns; ++mask) {
      for (std::size_t j = 0; j < n; ++j)
        signs[j] = ((mask >> j) & 1U) ? -1 : 1;
      est.lower = std::max(est.lower, signed_norm(signs));
    }
    est.note = "exact_enumerated";
  } else {
    Rng rng = Rng(seed).child("l1m_signs");
    for (int t = 0; t < std::max(budget, 8); ++t) {
      for (std::size_t j = 0; j < n; ++j) signs[j] = rng.uniform() < 0.5 ? -1 : 1;
      // greedy single-flip improvement
      double cur = signed_norm(signs);
      bool improved = true;
      while (improved) {
        improved = false;
        for (std::size_t j = 0; j < n; ++j) {
          signs[j] = -signs[j];
          double v = signed_norm(signs);
          if (v > cur * (1.0 + 1e-14)) {
            cur = v;
            improved = true;
          } else {
            signs[j] = -signs[j];
          }
        }
      }
      est.lower = std::max(est.lower, cur);
    }
    est.note = "sampled";
  }

  // user-supplied dual functionals can only improve the lower bound
  for (const auto& x : dual_pool) {
    if (x.size() != d) continue;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double inner = 0.0;
      for (std::size_t k = 0; k < d; ++k) inner += m.atom_values[j][k] * x[k];
      s += std::fabs(f[j]) * std::fabs(inner);
    }
    est.lower = std::max(est.lower, s);
  }
  return est;
}

// ---------------------------------------------------------------------------
// conjugate families
// ---------------------------------------------------------------------------

ConjugateFamilyReport conjugate_family_synthesize(
    const OperatorModel& op, const WeightFamily& family, double p, double tol,
    std::uint64_t seed, std::optional<double> required_constant,
    const std::vector<double>* control_density, const SynthesisOptions& opts) {
  op.validate();
  family.validate();
  if (family.base.atom_count() != op.rows())
    throw std::invalid_argument("family base must match the operator codomain atoms");

  ConjugateFamilyReport rep;
  const std::size_t n = op.cols();

  for (std::size_t k = 0; k < family.size(); ++k) {
    const auto& v = family.members[k];
    // restrict to the member's support: L^p(v dmu) on the non-null atoms
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] > 0.0) rows.push_back(i);
    if (rows.empty()) {
      // the zero member is dominated by any weight
      ConjugatePair pair;
      pair.member = k;
      pair.nu_weight.assign(n, 0.0);
      pair.functional.assign(n, 0.0);
      pair.certified = true;
      rep.assignment.push_back(std::move(pair));
      continue;
    }
    MeasureSpace mu_v{std::vector<double>()};
    std::vector<double> wv;
    for (std::size_t i : rows) {
      mu_v.masses.push_back(family.base.masses[i]);
      wv.push_back(v[i]);
    }
    OperatorModel member_op{Matrix(rows.size(), n), op.domain,
                            SpaceDescriptor::lp(p, mu_v, wv)};
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < n; ++c)
        member_op.matrix.at(r, c) = op.matrix.at(rows[r], c);

    SynthesisOptions o = opts;
    o.seed = seed + 37 * (k + 1);

    ConjugatePair pair;
    pair.member = k;
    if (required_constant) {
      auto res = synthesize_dominating_weight(member_op, p, wv, *required_constant, o);
      if (res.status == SynthesisStatus::Infeasible) {
        rep.conjugable = false;
        rep.failed_member = k;
        rep.witness = res.infeasibility_witness;
        return rep;
      }
      pair.constant = *required_constant;
      pair.nu_weight = res.certificate.z_star;
      pair.certified =
          res.status == SynthesisStatus::Feasible && res.certificate.certified;
    } else {
      auto mc = min_constant_domination(member_op, p, wv, tol, o);
      pair.constant = mc.constant;
      pair.nu_weight = mc.certificate.z_star;
      pair.certified = mc.certified;
    }

    // functional form against the control density, where one is supplied
    pair.functional = pair.nu_weight;
    if (control_density != nullptr) {
      for (std::size_t j = 0; j < n; ++j) {
        pair.functional[j] =
            (*control_density)[j] > 0.0 ? pair.nu_weight[j] / (*control_density)[j] : 0.0;
      }
    }
    pair.inclusion_norm = 0.0;
    {
      // exact norm of X -> L^p(w dnu): maximize <|f|^p, w dnu> over the ball
      auto dual_ball = power_dual_ball(op.domain, p);
      (void)dual_ball;
      // closed form via the Hoelder maximizer in h = |f|^p coordinates
      const auto& x = op.domain;
      if (is_inf(x.exponent)) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          s += pair.nu_weight[j] * x.measure.masses[j] * std::pow(1.0 / x.weight[j], p);
        pair.inclusion_norm = std::pow(s, 1.0 / p);
      } else {
        double r = x.exponent / p;
        if (r <= 1.0 + 1e-14) {
          double best = 0.0;
          for (std::size_t j = 0; j < n; ++j)
            best = std::max(best, pair.nu_weight[j] / x.weight[j]);
          pair.inclusion_norm = std::pow(best, 1.0 / p);
        } else {
          double rc = r / (r - 1.0);
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            double den = x.weight[j] * x.measure.masses[j];
            s += std::pow(pair.nu_weight[j] * x.measure.masses[j] / den, rc) * den;
          }
          pair.inclusion_norm = std::pow(s, 1.0 / (rc * p));
        }
      }
    }
    auto chk = weighted_norm_verify(op, WeightVector{pair.nu_weight}, WeightVector{v},
                                    p, 16, seed + 91 * (k + 1));
    pair.verified = chk.constant;
    rep.assignment.push_back(std::move(pair));
  }

  for (const auto& pair : rep.assignment) {
    rep.uniform_constant = std::max(rep.uniform_constant, pair.constant);
    rep.inclusion_bound = std::max(rep.inclusion_bound, pair.inclusion_norm);
  }
  return rep;
}

double conjugate_family_replay(const OperatorModel& op, const WeightFamily& family,
                               const ConjugateFamilyReport& report, double p,
                               int batch, std::uint64_t seed) {
  op.validate();
  family.validate();
  if (!report.conjugable) throw std::invalid_argument("report is not conjugable");
  Rng rng = Rng(seed).child("replay");
  const std::size_t n = op.cols();
  double worst = 0.0;
  for (int t = 0; t < batch + static_cast<int>(n) + 1; ++t) {
    std::vector<std::vector<double>> fam;
    if (t <= static_cast<int>(n)) {
      // canonical singleton families cover the usual binding directions
      std::vector<double> f(n, t == static_cast<int>(n) ? 1.0 : 0.0);
      if (t < static_cast<int>(n)) f[t] = 1.0;
      fam.push_back(std::move(f));
    } else {
      std::size_t k = 1 + rng.uniform_index(4);
      fam.resize(k);
      for (auto& f : fam) f = rng.gaussian_vector(n);
    }
    // pick the worst member for the summed weighted powers
    double best_num = 0.0;
    std::size_t worst_member = 0;
    for (std::size_t m = 0; m < family.size(); ++m) {
      const auto& v = family.members[m];
      double s = 0.0;
      for (const auto& f : fam) {
        auto tf = op.apply(f);
        for (std::size_t i = 0; i < tf.size(); ++i)
          s += std::pow(std::fabs(tf[i]), p) * v[i] * family.base.masses[i];
      }
      if (s > best_num) {
        best_num = s;
        worst_member = m;
      }
    }
    std::vector<double> sq(n, 0.0);
    for (const auto& f : fam)
      for (std::size_t j = 0; j < n; ++j) sq[j] += std::pow(std::fabs(f[j]), p);

    // stage 1: through the assigned weight (this is what a corrupted
    // assignment breaks, even when the end-to-end ratio still closes)
    const auto& w = report.assignment[worst_member].nu_weight;
    double mid = 0.0;
    for (std::size_t j = 0; j < n; ++j) mid += sq[j] * w[j] * op.domain.measure.masses[j];
    if (mid > 0.0) {
      worst = std::max(worst, std::pow(best_num / mid, 1.0 / p));
    } else if (best_num > 0.0) {
      return std::numeric_limits<double>::infinity();  // escaped the weight
    }

    // end to end: against the domain square-function norm
    for (auto& v : sq) v = std::pow(v, 1.0 / p);
    double den = norm_eval(op.domain, sq);
    if (den > 0.0) worst = std::max(worst, std::pow(best_num, 1.0 / p) / den);
  }
  return worst;
}

PthPowerCheck pth_power_factorable_check(const OperatorModel& op,
                                         const SpaceDescriptor& x, double p,
                                         int budget, std::uint64_t seed) {
  op.validate();
  x.validate();
  if (x.dim() != op.cols())
    throw std::invalid_argument("space does not match the operator domain atoms");
  PthPowerCheck out;
  // the factorability ratio is an operator norm with the p-th power norm on
  // the domain side
  OperatorModel powered{op.matrix, pth_power_space(x, p), op.codomain};
  out.factorability_lower = operator_norm(powered, std::max(budget, 8), seed).lower;

  // sampled inclusion constant into the operator-measure scale
  auto m = operator_vector_measure(op);
  Rng rng = Rng(seed).child("pth_inclusion");
  double best = 0.0;
  const std::size_t n = op.cols();
  for (int t = 0; t < std::max(budget, 8); ++t) {
    std::vector<double> f =
        t == 0 ? std::vector<double>(n, 1.0) : rng.gaussian_vector(n);
    double den = norm_eval(x, f);
    if (den <= 0.0) continue;
    std::vector<double> fp(n);
    for (std::size_t j = 0; j < n; ++j) fp[j] = std::pow(std::fabs(f[j]), p);
    auto est = l1_vm_norm(fp, m, {}, 8, seed + t);
    best = std::max(best, std::pow(est.lower, 1.0 / p) / den);
  }
  out.inclusion_lower = best;
  return out;
}

NormingConstants positively_norming_constants(
    const std::vector<std::vector<double>>& weights, const SpaceDescriptor& x,
    int budget, std::uint64_t seed) {
  x.validate();
  if (weights.empty()) throw std::invalid_argument("norming set must be nonempty");
  const std::size_t n = x.dim();
  NormingConstants out;

  auto dual = kothe_dual_space(x);
  for (const auto& w : weights) {
    if (w.size() != n) throw std::invalid_argument("norming weight size mismatch");
    out.c2 = std::max(out.c2, norm_eval(dual, w));
  }

  // exact support obstruction: an atom outside every support kills norming
  for (std::size_t j = 0; j < n; ++j) {
    bool covered = false;
    for (const auto& w : weights)
      if (w[j] > 0.0) covered = true;
    if (!covered) {
      out.c1 = 0.0;
      out.c1_exact = true;
      out.positively_norming = false;
      return out;
    }
  }

  auto sup_pair = [&](std::span<const double> h) {
    double best = 0.0;
    for (const auto& w : weights) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += h[j] * w[j] * x.measure.masses[j];
      best = std::max(best, s);
    }
    return best;
  };

  if (x.exponent == 1.0) {
    // exact via the covering LP: maximize ||h||_X over the polytope
    LpProblem lp;
    lp.num_vars = n;
    lp.objective.resize(n);
    for (std::size_t j = 0; j < n; ++j)
      lp.objective[j] = x.weight[j] * x.measure.masses[j];
    for (const auto& w : weights) {
      auto& row = lp.add_row('<', 1.0);
      for (std::size_t j = 0; j < n; ++j) row.coeffs[j] = w[j] * x.measure.masses[j];
    }
    auto sol = solve_lp(lp);
    if (sol.status == LpStatus::Unbounded) {
      out.c1 = 0.0;
      out.c1_exact = true;
    } else if (sol.status == LpStatus::Optimal && sol.value > 0.0) {
      out.c1 = 1.0 / sol.value;
      out.c1_exact = true;
    }
  } else {
    // multistart minimization of the norming functional over the sphere
    Rng rng = Rng(seed).child("norming");
    double best = std::numeric_limits<double>::infinity();
    for (int t = 0; t < std::max(budget, 8); ++t) {
      std::vector<double> h =
          t < static_cast<int>(n)
              ? [&] {
                  std::vector<double> e(n, 0.0);
                  e[t] = 1.0;
                  return e;
                }()
              : rng.uniform_vector(n, 0.0, 1.0);
      double nr = norm_eval(x, h);
      if (nr <= 0.0) continue;
      for (auto& v : h) v /= nr;
      // local descent with coordinate moves
      double cur = sup_pair(h);
      double step = 0.3;
      for (int it = 0; it < 120 && step > 1e-12; ++it) {
        bool improved = false;
        for (std::size_t j = 0; j < n; ++j) {
          for (double dir : {1.0, -1.0}) {
            auto cand = h;
            cand[j] = std::max(0.0, cand[j] + dir * step);
            double cn = norm_eval(x, cand);
            if (cn <= 0.0) continue;
            for (auto& v : cand) v /= cn;
            double val = sup_pair(cand);
            if (val < cur * (1.0 - 1e-14)) {
              h = cand;
              cur = val;
              improved = true;
            }
          }
        }
        if (!improved) step *= 0.5;
      }
      best = std::min(best, cur);
    }
    out.c1 = best;
  }
  out.positively_norming = out.c1 > 1e-12;

  // sign-pattern identity: sup_{s,k} <x, s w_k> equals sup_k <|x|, w_k>
  Rng rng = Rng(seed).child("sign_identity");
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    auto f = rng.gaussian_vector(n);
    double direct = 0.0;
    for (const auto& w : weights) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        s += std::fabs(f[j]) * w[j] * x.measure.masses[j];
      direct = std::max(direct, s);
    }
    double signed_sup = 0.0;
    for (const auto& w : weights) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        s += f[j] * (f[j] >= 0.0 ? 1.0 : -1.0) * w[j] * x.measure.masses[j];
      signed_sup = std::max(signed_sup, s);
    }
    worst = std::max(worst,
                     std::fabs(direct - signed_sup) / std::max(direct, 1e-300));
  }
  out.sign_identity_residual = worst;
  return out;
}

ConjugatePipelineReport conjugate_family_pipeline(const OperatorModel& op,
                                                  const SpaceDescriptor& x,
                                                  const WeightFamily& family, double p,
                                                  double tol, std::uint64_t seed,
                                                  const SynthesisOptions& opts) {
  op.validate();
  x.validate();
  family.validate();

  ConjugatePipelineReport rep;
  auto m = operator_vector_measure(op, family, p);
  rep.control_density = m.control_density;

  rep.pth = pth_power_factorable_check(op, x, p, 64, seed);

  // the extension acts from the control-density scale on the non-null atoms
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < m.source_atoms; ++j)
    if (m.control_density[j] > 0.0) kept.push_back(j);
  if (kept.empty()) throw std::invalid_argument("operator measure is identically zero");

  MeasureSpace nu{std::vector<double>()};
  std::vector<double> dens;
  for (std::size_t j : kept) {
    nu.masses.push_back(op.domain.measure.masses[j]);
    dens.push_back(m.control_density[j]);
  }
  OperatorModel extension{Matrix(op.rows(), kept.size()),
                          SpaceDescriptor::lp(p, nu, dens), op.codomain};
  for (std::size_t i = 0; i < op.rows(); ++i)
    for (std::size_t c = 0; c < kept.size(); ++c)
      extension.matrix.at(i, c) = op.matrix.at(i, kept[c]);

  std::vector<double> kept_density = dens;
  rep.conjugate = conjugate_family_synthesize(extension, family, p, tol, seed, {},
                                              &kept_density, opts);
  if (!rep.conjugate.conjugable) return rep;
  rep.replay_ratio =
      conjugate_family_replay(extension, family, rep.conjugate, p, 400, seed + 3);

  // audit: the produced functionals against the original space
  std::vector<std::vector<double>> w_full;
  auto xdual = kothe_dual_space(x);
  for (const auto& pair : rep.conjugate.assignment) {
    std::vector<double> w(op.cols(), 0.0);
    for (std::size_t c = 0; c < kept.size(); ++c) w[kept[c]] = pair.functional[c];
    rep.dual_box_bound = std::max(rep.dual_box_bound, norm_eval(xdual, w));
    w_full.push_back(std::move(w));
  }
  rep.audit = positively_norming_constants(w_full, x, 64, seed + 5);
  return rep;
}

KernelModel kernel_vector_measure(const std::vector<std::vector<double>>& grid,
                                  const MeasureSpace& x_measure,
                                  const MeasureSpace& y_measure,
                                  const WeightFamily& family, double p) {
  x_measure.validate();
  y_measure.validate();
  family.validate();
  const std::size_t nx = x_measure.atom_count();
  const std::size_t ny = y_measure.atom_count();
  if (grid.size() != nx)
    throw std::invalid_argument("kernel grid must have one row per x atom");
  for (const auto& row : grid) {
    if (row.size() != ny)
      throw std::invalid_argument("kernel grid row length must match the y atoms");
    for (double v : row)
      if (v < 0.0 || !std::isfinite(v))
        throw std::invalid_argument("kernel values must be finite and nonnegative");
  }
  if (family.base.atom_count() != ny)
    throw std::invalid_argument("family base must live on the y atoms");

  KernelModel out;
  out.op.domain = SpaceDescriptor::lp(p, x_measure);
  // codomain scale: the family's strongest member support carries the norm;
  // use the plain y measure for the descriptor
  out.op.codomain = SpaceDescriptor::lp(p, y_measure);
  out.op.matrix = Matrix(ny, nx);
  for (std::size_t i = 0; i < ny; ++i)
    for (std::size_t j = 0; j < nx; ++j)
      out.op.matrix.at(i, j) = grid[j][i] * x_measure.masses[j];
  out.op.validate();
  out.measure = operator_vector_measure(out.op, family, p);
  return out;
}

StableEmbeddingResult stable_embedding_mass_witness(
    std::size_t n, double p, double q, std::optional<EmbeddingConstants> constants,
    std::uint64_t seed) {
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("atom count must be a power of two");
  if (!(p >= 1.0) || p > q || q > 2.0)
    throw std::invalid_argument("exponents must satisfy 1 <= p <= q <= 2");

  StableEmbeddingResult out;
  out.atoms = n;

  EmbeddingConstants ec;
  if (constants) {
    ec = *constants;
    out.constants = ec;
  } else {
    // sample the embedding and estimate its constants; doubles the sample
    // dimension until the bracket tightens to 10%
    Rng base = Rng(seed).child("stable_embedding");
    bool gaussian = q == 2.0;
    int dim = static_cast<int>(std::max<std::size_t>(512, 16 * n));
    const int cap = 1 << 16;
    for (;;) {
      Rng rng = base.child("samples", static_cast<std::uint64_t>(dim));
      std::vector<double> g(static_cast<std::size_t>(dim) * n);
      for (auto& v : g) v = gaussian ? rng.gaussian() : rng.stable(q);
      auto ratio_of = [&](std::span<const double> a) {
        double qs = 0.0;
        for (double v : a) qs += std::pow(std::fabs(v), q);
        double qa = std::pow(qs, 1.0 / q);
        if (qa <= 0.0) return 0.0;
        double ps = 0.0;
        for (int s = 0; s < dim; ++s) {
          double inner = 0.0;
          for (std::size_t j = 0; j < n; ++j)
            inner += g[static_cast<std::size_t>(s) * n + j] * a[j];
          ps += std::pow(std::fabs(inner), p);
        }
        return std::pow(ps / dim, 1.0 / p) / qa;
      };
      double lo = std::numeric_limits<double>::infinity();
      double hi = 0.0;
      // the partition indicators are the test functions; add random probes
      for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0);
        e[j] = 1.0;
        double r = ratio_of(e);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      Rng probe = base.child("probe", static_cast<std::uint64_t>(dim));
      for (int t = 0; t < 64; ++t) {
        auto a = probe.gaussian_vector(n);
        double r = ratio_of(a);
        if (r > 0.0) {
          lo = std::min(lo, r);
          hi = std::max(hi, r);
        }
      }
      out.bracket_spread = (hi - lo) / std::max(lo, 1e-300);
      out.sample_dim = dim;
      if (out.bracket_spread <= 0.10) {
        ec.k1 = lo;
        ec.c2 = hi;
        ec.c1 = hi;
        break;
      }
      if (dim >= cap) {
        if (!gaussian) {
          gaussian = true;  // stable sampling failed to bracket; fall back
          out.degraded_to_gaussian = true;
          dim = static_cast<int>(std::max<std::size_t>(512, 16 * n));
          continue;
        }
        ec.k1 = lo;
        ec.c2 = hi;
        ec.c1 = hi;
        break;
      }
      dim *= 2;
    }
    out.constants = ec;
  }

  // necessity cuts from the indicator test functions on the uniform partition:
  // g_i mu_i >= (k1/c2)^p mu(A_i)^{p/q}
  MeasureSpace mu = MeasureSpace::uniform(n, 1.0);
  const double cut = std::pow(ec.k1 / ec.c2, p) *
                     std::pow(1.0 / static_cast<double>(n), p / q);
  LpProblem lp;
  lp.num_vars = n;
  lp.objective.resize(n);
  for (std::size_t j = 0; j < n; ++j) lp.objective[j] = -mu.masses[j];
  for (std::size_t j = 0; j < n; ++j) {
    auto& row = lp.add_row('>', cut);
    row.coeffs[j] = mu.masses[j];
  }
  auto sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error("mass witness program failed to solve");
  out.minimal_mass = -sol.value;
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("slope needs at least two points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double m = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double lx = std::log(x[i]);
    double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace weightforge
