#include "weightforge/space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "weightforge/kernels.hpp"
#include "weightforge/rng.hpp"

namespace weightforge {

double conjugate_exponent(double p) {
  if (is_inf(p)) return 1.0;
  if (p < 1.0) throw std::invalid_argument("exponent must be >= 1");
  if (p == 1.0) return kInf;
  return p / (p - 1.0);
}

double MeasureSpace::total_mass() const {
  double s = 0.0;
  for (double m : masses) s += m;
  return s;
}

void MeasureSpace::validate() const {
  if (masses.empty()) throw std::invalid_argument("measure space needs at least one atom");
  for (double m : masses) {
    if (!(m > 0.0) || !std::isfinite(m))
      throw std::invalid_argument("measure atoms must have strictly positive finite mass");
  }
}

MeasureSpace MeasureSpace::uniform(std::size_t n, double total) {
  if (n == 0) throw std::invalid_argument("measure space needs at least one atom");
  double mass = total > 0.0 ? total / static_cast<double>(n) : 1.0;
  return MeasureSpace{std::vector<double>(n, mass)};
}

bool same_measure(const MeasureSpace& a, const MeasureSpace& b, double tol) {
  if (a.atom_count() != b.atom_count()) return false;
  for (std::size_t i = 0; i < a.atom_count(); ++i)
    if (std::fabs(a.masses[i] - b.masses[i]) > tol) return false;
  return true;
}

bool WeightVector::strictly_positive() const {
  for (double v : values)
    if (!(v > 0.0)) return false;
  return true;
}

void WeightVector::validate() const {
  for (double v : values)
    if (v < 0.0 || !std::isfinite(v))
      throw std::invalid_argument("weight vector entries must be finite and nonnegative");
}

void SpaceDescriptor::validate() const {
  measure.validate();
  if (!is_inf(exponent) && !(exponent >= 1.0))
    throw std::invalid_argument("space exponent must be >= 1 or inf");
  if (weight.size() != measure.atom_count())
    throw std::invalid_argument("space weight length must match atom count");
  for (double v : weight)
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("space weight must be strictly positive");
}

SpaceDescriptor SpaceDescriptor::lp(double p, MeasureSpace measure) {
  std::size_t n = measure.atom_count();
  return lp(p, std::move(measure), std::vector<double>(n, 1.0));
}

SpaceDescriptor SpaceDescriptor::lp(double p, MeasureSpace measure,
                                    std::vector<double> weight) {
  SpaceDescriptor s{std::move(measure), p, std::move(weight)};
  s.validate();
  return s;
}

double norm_eval(const SpaceDescriptor& space, std::span<const double> f) {
  if (f.size() != space.dim()) throw std::invalid_argument("norm_eval: dimension mismatch");
  return lp_seminorm(f, space.weight, space.measure, space.exponent);
}

double lp_seminorm(std::span<const double> f, std::span<const double> weight,
                   const MeasureSpace& measure, double p) {
  const std::size_t n = f.size();
  if (weight.size() != n || measure.atom_count() != n)
    throw std::invalid_argument("lp_seminorm: dimension mismatch");
  if (is_inf(p)) {
    return kernels::active().weighted_abs_max(f.data(), weight.data(), n);
  }
  // combined weight w_i = a_i mu_i
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = weight[i] * measure.masses[i];
  double s = kernels::weighted_pow_sum(f.data(), w.data(), n, p);
  if (s <= 0.0) return 0.0;
  return p == 1.0 ? s : std::pow(s, 1.0 / p);
}

SpaceDescriptor pth_power_space(const SpaceDescriptor& space, double p) {
  space.validate();
  if (!(p >= 1.0) || is_inf(p))
    throw std::invalid_argument("pth_power_space: power must be finite and >= 1");
  SpaceDescriptor out = space;
  if (is_inf(space.exponent)) {
    for (auto& a : out.weight) a = std::pow(a, p);
    return out;
  }
  if (space.exponent < p - 1e-15) {
    throw std::invalid_argument(
        "pth_power_space: exponent " + std::to_string(space.exponent) +
        " is below the requested power " + std::to_string(p) +
        " (p-convexity violated, the power space is not normable)");
  }
  out.exponent = std::max(space.exponent / p, 1.0);
  return out;
}

SpaceDescriptor kothe_dual_space(const SpaceDescriptor& space) {
  space.validate();
  SpaceDescriptor out = space;
  const double p = space.exponent;
  if (p == 1.0) {
    out.exponent = kInf;
    for (auto& a : out.weight) a = 1.0 / a;
  } else if (is_inf(p)) {
    out.exponent = 1.0;
    for (auto& a : out.weight) a = 1.0 / a;
  } else {
    const double q = conjugate_exponent(p);
    out.exponent = q;
    for (auto& a : out.weight) a = std::pow(a, 1.0 - q);
  }
  return out;
}

bool DualBallDescriptor::is_box() const { return is_inf(dual_space.exponent); }

std::vector<double> DualBallDescriptor::box_max() const {
  if (!is_box()) throw std::logic_error("dual ball is not a box");
  // ||g|| = max |g_i| c_i with c = dual weight, so the corner is 1/c.
  std::vector<double> m(dual_space.dim());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = 1.0 / dual_space.weight[i];
  return m;
}

double DualBallDescriptor::dual_norm(std::span<const double> g) const {
  return norm_eval(dual_space, g);
}

bool DualBallDescriptor::contains(std::span<const double> g, double tol) const {
  return dual_norm(g) <= 1.0 + tol;
}

std::vector<double> DualBallDescriptor::project(std::span<const double> g) const {
  std::vector<double> out(g.begin(), g.end());
  if (is_box()) {
    auto m = box_max();
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = std::clamp(out[i], -m[i], m[i]);
    return out;
  }
  double nrm = dual_norm(g);
  if (nrm > 1.0) {
    for (auto& v : out) v /= nrm;
  }
  return out;
}

DualBallDescriptor kothe_dual_ball(const SpaceDescriptor& space) {
  return DualBallDescriptor{kothe_dual_space(space)};
}

DualBallDescriptor power_dual_ball(const SpaceDescriptor& space, double p) {
  return kothe_dual_ball(pth_power_space(space, p));
}

std::vector<double> norming_functional(const SpaceDescriptor& space,
                                       std::span<const double> f) {
  space.validate();
  const std::size_t n = space.dim();
  if (f.size() != n) throw std::invalid_argument("norming_functional: dimension mismatch");
  std::vector<double> g(n, 0.0);
  const double p = space.exponent;
  const double nf = norm_eval(space, f);
  if (nf == 0.0) return g;
  if (is_inf(p)) {
    std::size_t best = 0;
    double bv = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = space.weight[i] * std::fabs(f[i]);
      if (v > bv + 1e-18) {
        bv = v;
        best = i;
      }
    }
    double sign = f[best] >= 0.0 ? 1.0 : -1.0;
    g[best] = sign * space.weight[best] / space.measure.masses[best];
    return g;
  }
  if (p == 1.0) {
    for (std::size_t i = 0; i < n; ++i) {
      double sign = f[i] >= 0.0 ? 1.0 : -1.0;
      g[i] = sign * space.weight[i];
    }
    return g;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sign = f[i] >= 0.0 ? 1.0 : -1.0;
    g[i] = sign * std::pow(std::fabs(f[i]) / nf, p - 1.0) * space.weight[i];
  }
  return g;
}

double p_convexity_lower_bound(const SpaceDescriptor& space, double p, int budget,
                               std::uint64_t seed) {
  space.validate();
  if (budget < 1) throw std::invalid_argument("p_convexity_lower_bound: budget >= 1");
  const std::size_t n = space.dim();
  Rng rng = Rng(seed).child("pconvexity");

  auto family_ratio = [&](const std::vector<std::vector<double>>& fam) {
    std::vector<double> sq(n, 0.0);
    double denom_p = 0.0;
    for (const auto& f : fam) {
      for (std::size_t i = 0; i < n; ++i) sq[i] += std::pow(std::fabs(f[i]), p);
      denom_p += std::pow(norm_eval(space, f), p);
    }
    if (denom_p <= 0.0) return 0.0;
    for (auto& s : sq) s = std::pow(s, 1.0 / p);
    return norm_eval(space, sq) / std::pow(denom_p, 1.0 / p);
  };

  double best = 0.0;
  // canonical families: singleton, and the full coordinate family
  {
    std::vector<std::vector<double>> fam;
    std::vector<double> e(n, 0.0);
    e[0] = 1.0;
    fam.push_back(e);
    best = std::max(best, family_ratio(fam));
    fam.clear();
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> ei(n, 0.0);
      ei[i] = 1.0;
      fam.push_back(ei);
    }
    best = std::max(best, family_ratio(fam));
  }
  for (int trial = 0; trial < budget; ++trial) {
    std::size_t k = 1 + trial % std::min<std::size_t>(4, n + 1);
    std::vector<std::vector<double>> fam;
    for (std::size_t i = 0; i < k; ++i) fam.push_back(rng.gaussian_vector(n));
    best = std::max(best, family_ratio(fam));
  }
  return best;
}

}  // namespace weightforge
