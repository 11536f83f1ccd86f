#include "weightforge/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "weightforge/parallel.hpp"
#include "weightforge/rng.hpp"

namespace weightforge {

namespace {

// square function s = (sum_i |x_i|^p)^{1/p}, entrywise over the family
std::vector<double> square_function(const std::vector<std::vector<double>>& fam,
                                    double p) {
  std::vector<double> s(fam.empty() ? 0 : fam[0].size(), 0.0);
  for (const auto& x : fam)
    for (std::size_t j = 0; j < s.size(); ++j) s[j] += std::pow(std::fabs(x[j]), p);
  for (auto& v : s) v = std::pow(v, 1.0 / p);
  return s;
}

struct FamilyRatio {
  double value = 0.0;
  double num = 0.0;
  double den = 0.0;
};

}  // namespace

double weak_pool_norm(const std::vector<std::vector<double>>& family,
                      const MeasureSpace& mu, double p,
                      const std::vector<std::vector<double>>& pool) {
  double best = 0.0;
  for (const auto& x : pool) {
    double s = 0.0;
    for (const auto& f : family) {
      double inner = 0.0;
      for (std::size_t j = 0; j < f.size(); ++j) inner += f[j] * x[j] * mu.masses[j];
      s += std::pow(std::fabs(inner), p);
    }
    best = std::max(best, std::pow(s, 1.0 / p));
  }
  return best;
}

namespace {

// shared multistart ascent over families with a pluggable denominator
template <typename Denominator, typename DenGradient>
WitnessFamily family_ascent(const OperatorModel& op, double p, int family_size,
                            int budget, std::uint64_t seed, const char* label,
                            Denominator&& den_value, DenGradient&& den_gradient) {
  op.validate();
  if (family_size < 1) throw std::invalid_argument("family_size must be >= 1");
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");
  const std::size_t n = op.cols();
  const std::size_t m = op.rows();
  const std::size_t k = static_cast<std::size_t>(family_size);

  auto numerator = [&](const std::vector<std::vector<double>>& fam) {
    std::vector<std::vector<double>> tf(fam.size());
    for (std::size_t i = 0; i < fam.size(); ++i) tf[i] = op.apply(fam[i]);
    auto s = square_function(tf, p);
    return norm_eval(op.codomain, s);
  };

  auto ratio_of = [&](const std::vector<std::vector<double>>& fam) -> FamilyRatio {
    FamilyRatio r;
    r.den = den_value(fam);
    if (r.den <= 0.0) return r;
    r.num = numerator(fam);
    r.value = r.num / r.den;
    return r;
  };

  auto ascend = [&](std::vector<std::vector<double>> fam) {
    auto cur = ratio_of(fam);
    double step = 0.3;
    for (int it = 0; it < 160; ++it) {
      if (cur.den <= 0.0) break;
      // gradient of log(num) - log(den) in family coordinates
      std::vector<std::vector<double>> tf(fam.size());
      for (std::size_t i = 0; i < k; ++i) tf[i] = op.apply(fam[i]);
      auto st = square_function(tf, p);
      auto gy = norm_gradient(op.codomain, st);
      std::vector<std::vector<double>> grad(k, std::vector<double>(n, 0.0));
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t a = 0; a < m; ++a) {
          if (st[a] <= 1e-300 || gy[a] == 0.0 || tf[i][a] == 0.0) continue;
          double c = gy[a] * std::pow(st[a], 1.0 - p) *
                     std::pow(std::fabs(tf[i][a]), p - 1.0) *
                     (tf[i][a] > 0.0 ? 1.0 : -1.0);
          for (std::size_t j = 0; j < n; ++j) grad[i][j] += c * op.matrix.at(a, j);
        }
        for (std::size_t j = 0; j < n; ++j) grad[i][j] /= std::max(cur.num, 1e-300);
      }
      den_gradient(fam, cur.den, grad);  // subtracts d log(den)/d x
      double gn = 0.0;
      for (const auto& g : grad)
        for (double v : g) gn += v * v;
      gn = std::sqrt(gn);
      if (gn <= 1e-14) break;
      bool improved = false;
      for (int attempt = 0; attempt < 8; ++attempt) {
        auto cand = fam;
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < n; ++j)
            cand[i][j] += step * grad[i][j] / gn;
        auto cr = ratio_of(cand);
        if (cr.value > cur.value * (1.0 + 1e-14)) {
          fam = std::move(cand);
          cur = cr;
          step *= 1.4;
          improved = true;
          break;
        }
        step *= 0.5;
      }
      if (!improved && step < 1e-13) break;
    }
    WitnessFamily w;
    w.value = cur.value;
    w.vectors = std::move(fam);
    return w;
  };

  const int restarts = std::max(budget, 4);
  std::vector<WitnessFamily> results(restarts);
  Rng base = Rng(seed).child(label);
  parallel_for(static_cast<std::size_t>(restarts), [&](std::size_t r) {
    Rng rng = base.child("restart", r);
    std::vector<std::vector<double>> fam(k, std::vector<double>(n, 0.0));
    if (r == 0) {
      // coordinate family, padded or cycled
      for (std::size_t i = 0; i < k; ++i) fam[i][i % n] = 1.0;
    } else if (r == 1) {
      fam[0].assign(n, 1.0);
    } else if (r - 2 < n && k >= 1) {
      fam[0][r - 2] = 1.0;  // singleton coordinate start (zero padding)
    } else {
      for (auto& x : fam) x = rng.gaussian_vector(n);
    }
    results[r] = ascend(std::move(fam));
  });

  WitnessFamily best = results[0];
  for (auto& w : results)
    if (w.value > best.value) best = std::move(w);
  return best;
}

}  // namespace

WitnessFamily rho_lower(const OperatorModel& op, double p, int family_size,
                        int budget, std::uint64_t seed) {
  auto den_value = [&](const std::vector<std::vector<double>>& fam) {
    auto s = square_function(fam, p);
    return norm_eval(op.domain, s);
  };
  auto den_gradient = [&](const std::vector<std::vector<double>>& fam, double den,
                          std::vector<std::vector<double>>& grad) {
    auto s = square_function(fam, p);
    auto gx = norm_gradient(op.domain, s);
    for (std::size_t i = 0; i < fam.size(); ++i) {
      for (std::size_t j = 0; j < fam[i].size(); ++j) {
        if (s[j] <= 1e-300 || gx[j] == 0.0 || fam[i][j] == 0.0) continue;
        double c = gx[j] * std::pow(s[j], 1.0 - p) *
                   std::pow(std::fabs(fam[i][j]), p - 1.0) *
                   (fam[i][j] > 0.0 ? 1.0 : -1.0);
        grad[i][j] -= c / std::max(den, 1e-300);
      }
    }
  };
  return family_ascent(op, p, family_size, budget, seed, "rho_lower", den_value,
                       den_gradient);
}

RhoUpperResult rho_upper(const OperatorModel& op, double p, double tol,
                         const SynthesisOptions& opts) {
  op.validate();
  if (std::fabs(op.codomain.exponent - p) > 1e-12)
    throw std::invalid_argument(
        "rho_upper needs an exponent-p codomain so the power-dual ball is a box "
        "with a maximal element");
  auto top = power_dual_ball(op.codomain, p).box_max();
  auto quick = rho_lower(op, p, 1, 8, opts.seed + 3);
  auto mc = min_constant_domination(op, p, top, tol, opts, quick.value);
  RhoUpperResult out;
  out.certificate = mc.certificate;
  out.upper.empirical = mc.empirical_constant;
  out.upper.route = mc.certificate.route;
  if (mc.certified) out.upper.certified = mc.constant;
  return out;
}

WitnessFamily lambda_lower(const OperatorModel& op, double p, int family_size,
                           int budget, std::uint64_t seed,
                           const std::vector<std::vector<double>>* pool) {
  auto own_pool = pool == nullptr ? coordinate_pool(op.domain)
                                  : std::vector<std::vector<double>>(*pool);
  const auto& mu = op.domain.measure;
  auto den_value = [&](const std::vector<std::vector<double>>& fam) {
    return weak_pool_norm(fam, mu, p, own_pool);
  };
  auto den_gradient = [&](const std::vector<std::vector<double>>& fam, double den,
                          std::vector<std::vector<double>>& grad) {
    // supergradient through the maximizing pool functional
    std::size_t best = 0;
    double bv = -1.0;
    for (std::size_t kk = 0; kk < own_pool.size(); ++kk) {
      double s = 0.0;
      for (const auto& f : fam) {
        double inner = 0.0;
        for (std::size_t j = 0; j < f.size(); ++j)
          inner += f[j] * own_pool[kk][j] * mu.masses[j];
        s += std::pow(std::fabs(inner), p);
      }
      if (s > bv) {
        bv = s;
        best = kk;
      }
    }
    const auto& x = own_pool[best];
    for (std::size_t i = 0; i < fam.size(); ++i) {
      double inner = 0.0;
      for (std::size_t j = 0; j < fam[i].size(); ++j)
        inner += fam[i][j] * x[j] * mu.masses[j];
      if (inner == 0.0) continue;
      double c = std::pow(den, 1.0 - p) * std::pow(std::fabs(inner), p - 1.0) *
                 (inner > 0.0 ? 1.0 : -1.0);
      for (std::size_t j = 0; j < fam[i].size(); ++j)
        grad[i][j] -= c * x[j] * mu.masses[j] / std::max(den, 1e-300);
    }
  };
  return family_ascent(op, p, family_size, budget, seed, "lambda_lower", den_value,
                       den_gradient);
}

LambdaUpperResult lambda_upper(const OperatorModel& op, double p, int pool_size,
                               double tol, const SynthesisOptions& opts) {
  op.validate();
  if (std::fabs(op.codomain.exponent - p) > 1e-12)
    throw std::invalid_argument(
        "lambda_upper needs an exponent-p codomain so the power-dual ball is a box "
        "with a maximal element");
  auto top = power_dual_ball(op.codomain, p).box_max();
  auto mc = min_constant_pietsch(op, p, top, tol, pool_size, opts);
  LambdaUpperResult out;
  out.certificate = mc.certificate;
  out.upper.empirical = mc.empirical_constant;
  out.upper.route = mc.certificate.route;
  if (mc.certified) out.upper.certified = mc.constant;
  return out;
}

double two_regular_crude_bound(const OperatorModel& op) {
  return 1.783 * operator_norm_upper(op);
}

}  // namespace weightforge
