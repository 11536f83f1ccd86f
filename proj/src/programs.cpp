#include "weightforge/programs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "weightforge/kernels.hpp"
#include "weightforge/regularity.hpp"
#include "weightforge/rng.hpp"

namespace weightforge {

namespace {

double power_pairing(std::span<const double> f, std::span<const double> w,
                     const MeasureSpace& mu, double p) {
  double s = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j)
    s += std::pow(std::fabs(f[j]), p) * w[j] * mu.masses[j];
  return s;
}

// min over the unit sphere of X of <|f|^p, g dmu>; closed form at a vertex
double sphere_floor(const SpaceDescriptor& x, std::span<const double> g, double p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < x.dim(); ++j) {
    double d = g[j] * x.measure.masses[j];
    double denom;
    if (is_inf(x.exponent)) {
      denom = std::pow(x.weight[j], p);
    } else {
      denom = std::pow(x.weight[j] * x.measure.masses[j], p / x.exponent);
    }
    best = std::min(best, d / denom);
  }
  return best;
}

}  // namespace

EndoWeightReport endomorphism_weight(const OperatorModel& op, double p, double c,
                                     int truncation, std::uint64_t seed,
                                     const SynthesisOptions& opts) {
  op.validate();
  if (!(p >= 1.0) || is_inf(p))
    throw std::invalid_argument("endomorphism exponent must be finite and >= 1");
  if (!(c > 0.0)) throw std::invalid_argument("chain constant must be positive");
  if (truncation < 1) throw std::invalid_argument("truncation must be >= 1");
  if (op.domain.dim() != op.codomain.dim() ||
      !same_measure(op.domain.measure, op.codomain.measure) ||
      op.domain.exponent != op.codomain.exponent)
    throw std::invalid_argument("endomorphism weight needs domain == codomain");

  const std::size_t n = op.domain.dim();
  const int N = truncation;
  auto ball = power_dual_ball(op.domain, p);

  EndoWeightReport rep;
  rep.p = p;
  rep.constant = c;
  rep.truncation = N;

  // g_0 = indicator normalized into the dual ball
  std::vector<double> g0(n, 1.0);
  double nrm0 = ball.dual_norm(g0);
  for (auto& v : g0) v /= nrm0;
  rep.steps.push_back(EndoStep{g0, true, "normalized_indicator", 0.0});

  bool all_certified = true;
  for (int i = 0; i <= N; ++i) {  // one extra step bounds the truncated tail
    SynthesisOptions o = opts;
    o.seed = seed + 1000 + static_cast<std::uint64_t>(i);
    auto res = synthesize_dominating_weight(op, p, rep.steps.back().weight, c, o);
    if (res.status == SynthesisStatus::Infeasible)
      throw std::runtime_error(
          "endomorphism chain step infeasible: the supplied constant lies below "
          "the p-regular norm");
    EndoStep step;
    step.weight = res.certificate.z_star;
    step.certified = res.certificate.certified;
    step.route = res.certificate.route;
    step.residual = res.certificate.residual;
    if (!step.certified) all_certified = false;
    rep.steps.push_back(std::move(step));
  }
  rep.all_steps_certified = all_certified;

  // g = sum_{i<=N} 2^{-i} g_i, with the last synthesized weight paying the tail
  std::vector<double> g(n, 0.0);
  double coef = 1.0;
  for (int i = 0; i <= N; ++i) {
    for (std::size_t j = 0; j < n; ++j) g[j] += coef * rep.steps[i].weight[j];
    coef *= 0.5;
  }
  const auto& g_tail = rep.steps.back().weight;  // g_{N+1}

  // strict positivity: mix in a positive ball element when needed
  bool mix = false;
  for (double v : g)
    if (!(v > 0.0)) mix = true;
  std::vector<double> mix_dir(n, 0.0);
  const double eps0 = 1e-12;
  if (mix) {
    if (ball.is_box()) {
      mix_dir = ball.box_max();
    } else {
      mix_dir.assign(n, 1.0);
      double nd = ball.dual_norm(mix_dir);
      for (auto& v : mix_dir) v /= nd;
    }
    for (std::size_t j = 0; j < n; ++j) g[j] += eps0 * mix_dir[j];
  }
  rep.epsilon_mix_applied = mix;

  // tail bound: kappa covers the g_{N+1} term, the mix term enters through
  // the crude regularity bound and the sphere floor of g
  double kappa = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (g[j] > 0.0) kappa = std::max(kappa, g_tail[j] / g[j]);
  }
  double tail = std::ldexp(kappa, -(N + 1));  // 2^{-(N+1)} kappa
  if (mix) {
    double bmod = operator_norm_upper(modulus(op));
    double floor = sphere_floor(op.domain, g, p);
    if (floor > 0.0)
      tail += eps0 * std::pow(bmod, p) * ball.dual_norm(mix_dir) /
              (2.0 * std::pow(c, p) * floor);
  }
  rep.tail_bound = tail;

  // normalize into the unit dual ball (scales both sides of the chain)
  double nrm = ball.dual_norm(g);
  if (nrm > 1.0)
    for (auto& v : g) v /= nrm;
  rep.g = g;
  rep.certified_constant = std::pow(2.0, 1.0 / p) * c * std::pow(1.0 + tail, 1.0 / p);

  // fresh-batch check of the summed inequality
  Rng rng = Rng(seed).child("endo_batch");
  double worst = 0.0;
  const double bound_p = 2.0 * std::pow(c, p) * (1.0 + tail);
  for (int t = 0; t < 2000; ++t) {
    auto f = rng.gaussian_vector(n);
    auto tf = op.apply(f);
    double lhs = power_pairing(tf, g, op.domain.measure, p);
    double rhs = bound_p * power_pairing(f, g, op.domain.measure, p);
    worst = std::max(worst, (lhs - rhs) / std::max({lhs, rhs, 1e-300}));
  }
  rep.chain_residual = std::max(worst, 0.0);

  // the weighted operator norm of T on L^p(g dmu)
  auto gspace = SpaceDescriptor::lp(p, op.domain.measure, g);
  OperatorModel tg{op.matrix, gspace, gspace};
  auto est = operator_norm(tg, 48, seed + 5);
  rep.verified_norm = est.lower;
  rep.verified_exact = est.exact;
  return rep;
}

L2WeightReport l2_weight_program(const OperatorModel& op, std::uint64_t seed,
                                 int truncation, const SynthesisOptions& opts) {
  op.validate();
  if (op.domain.dim() != op.codomain.dim() ||
      !same_measure(op.domain.measure, op.codomain.measure) ||
      op.domain.exponent != op.codomain.exponent)
    throw std::invalid_argument("the square-weight program needs domain == codomain");
  const double p = op.domain.exponent;
  if (is_inf(p)) throw std::invalid_argument("finite exponent required");

  L2WeightReport rep;
  const std::size_t n = op.domain.dim();

  if (p >= 2.0) {
    double c = two_regular_crude_bound(op);
    if (p == 2.0) {
      auto up = rho_upper(op, 2.0, 1e-7, opts);
      if (up.upper.certified) c = std::min(c, *up.upper.certified);
    }
    rep.constant = c;
    rep.endo = endomorphism_weight(op, 2.0, c, truncation, seed, opts);
    rep.g = rep.endo.g;
  } else {
    rep.via_adjoint = true;
    auto adj = adjoint(op);
    double c = two_regular_crude_bound(adj);
    rep.constant = c;
    rep.endo = endomorphism_weight(adj, 2.0, c, truncation, seed, opts);
    // the adjoint bound on the g'-weighted square scale transfers to T on the
    // reciprocal weight
    rep.g.resize(n);
    for (std::size_t j = 0; j < n; ++j) rep.g[j] = 1.0 / rep.endo.g[j];
  }

  auto gspace = SpaceDescriptor::lp(2.0, op.domain.measure, rep.g);
  OperatorModel tg{op.matrix, gspace, gspace};
  rep.verified_norm = operator_norm(tg, 32, seed + 9).lower;  // exact: spectral
  rep.target_bound =
      std::sqrt(2.0) * rep.constant * std::sqrt(1.0 + rep.endo.tail_bound);
  return rep;
}

AllExponentReport regular_operator_weight(const OperatorModel& op,
                                          std::vector<double> p_grid,
                                          std::uint64_t seed, int truncation,
                                          const SynthesisOptions& opts) {
  op.validate();
  if (op.domain.dim() != op.codomain.dim() ||
      !same_measure(op.domain.measure, op.codomain.measure) ||
      op.domain.exponent != op.codomain.exponent)
    throw std::invalid_argument("the all-exponent program needs domain == codomain");

  const std::size_t n = op.domain.dim();
  const auto& mu = op.domain.measure;

  // exponent-1 chains for the operator and its adjoint; the modulus bound
  // certifies both constants (regular operators)
  double c1 = operator_norm_upper(modulus(op)) * (1.0 + 1e-9);
  auto e1 = endomorphism_weight(op, 1.0, c1, truncation, seed, opts);
  auto adj = adjoint(op);
  double c1a = operator_norm_upper(modulus(adj)) * (1.0 + 1e-9);
  auto ea = endomorphism_weight(adj, 1.0, c1a, truncation, seed + 7, opts);

  AllExponentReport rep;
  rep.grid = std::move(p_grid);

  // mixed weight
  rep.g.resize(n);
  for (std::size_t j = 0; j < n; ++j) rep.g[j] = 0.5 * (e1.g[j] + ea.g[j]);

  auto l1_norm_exact = [&](std::span<const double> g) {
    double best = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        s += std::fabs(op.matrix.at(i, j)) * g[i] * mu.masses[i];
      best = std::max(best, s / (g[j] * mu.masses[j]));
    }
    return best;
  };
  auto weighted_sup_exact = [&](std::span<const double> g) {
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        s += std::fabs(op.matrix.at(i, j)) * g[j];
      best = std::max(best, s / g[i]);
    }
    return best;
  };

  rep.m1 = l1_norm_exact(rep.g);
  rep.m1_individual = l1_norm_exact(e1.g);
  rep.minf_weighted = weighted_sup_exact(rep.g);
  rep.minf_individual = weighted_sup_exact(ea.g);
  {
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += std::fabs(op.matrix.at(i, j));
      best = std::max(best, s);
    }
    rep.minf = best;  // plain sup endpoint of the L^p(g dmu) scale
  }
  rep.endpoint_degradation = std::max(rep.m1 / std::max(rep.m1_individual, 1e-300),
                                      rep.minf_weighted /
                                          std::max(rep.minf_individual, 1e-300));

  bool all_ok = true;
  for (double p : rep.grid) {
    double bound = is_inf(p) ? rep.minf
                             : std::pow(rep.m1, 1.0 / p) * std::pow(rep.minf, 1.0 - 1.0 / p);
    rep.interpolation_bound.push_back(bound);
    // the infinity endpoint of the L^p(g dmu) scale is the plain sup norm
    auto gspace = is_inf(p) ? SpaceDescriptor::lp(p, mu)
                            : SpaceDescriptor::lp(p, mu, rep.g);
    OperatorModel tg{op.matrix, gspace, gspace};
    double lower = operator_norm(tg, 32, seed + 11).lower;
    rep.verified_lower.push_back(lower);
    if (lower > bound * (1.0 + 1e-6)) all_ok = false;
  }
  rep.all_verified = all_ok;
  return rep;
}

WeightedNormCheck weighted_norm_verify(const OperatorModel& op,
                                       const WeightVector& w, const WeightVector& v,
                                       double p, int trials, std::uint64_t seed) {
  op.validate();
  w.validate();
  v.validate();
  if (w.size() != op.cols() || v.size() != op.rows())
    throw std::invalid_argument("weighted_norm_verify: weight sizes do not match");

  WeightedNormCheck out;
  std::vector<std::size_t> dom_keep, cod_keep;
  for (std::size_t j = 0; j < w.size(); ++j)
    if (w.values[j] > 0.0) dom_keep.push_back(j);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v.values[i] > 0.0) cod_keep.push_back(i);

  // a null-weight direction escaping through T makes the ratio unbounded
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w.values[j] > 0.0) continue;
    for (std::size_t i : cod_keep) {
      if (op.matrix.at(i, j) != 0.0) {
        out.infeasible_direction = true;
        break;
      }
    }
  }

  if (dom_keep.empty() || cod_keep.empty()) return out;

  MeasureSpace mu_dom{std::vector<double>()}, mu_cod{std::vector<double>()};
  std::vector<double> wd, vc;
  for (std::size_t j : dom_keep) {
    mu_dom.masses.push_back(op.domain.measure.masses[j]);
    wd.push_back(w.values[j]);
  }
  for (std::size_t i : cod_keep) {
    mu_cod.masses.push_back(op.codomain.measure.masses[i]);
    vc.push_back(v.values[i]);
  }
  OperatorModel reduced{Matrix(cod_keep.size(), dom_keep.size()),
                        SpaceDescriptor::lp(p, mu_dom, wd),
                        SpaceDescriptor::lp(p, mu_cod, vc)};
  for (std::size_t r = 0; r < cod_keep.size(); ++r)
    for (std::size_t c = 0; c < dom_keep.size(); ++c)
      reduced.matrix.at(r, c) = op.matrix.at(cod_keep[r], dom_keep[c]);
  out.constant = operator_norm(reduced, std::max(trials, 4), seed).lower;
  return out;
}

}  // namespace weightforge
