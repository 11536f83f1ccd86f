#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "weightforge/programs.hpp"
#include "weightforge/rng.hpp"
#include "weightforge/vector_measure.hpp"

using namespace weightforge;

TEST_SUITE("family_measure") {
  TEST_CASE("indicator family on two uniform atoms") {
    WeightFamily fam{MeasureSpace{{0.5, 0.5}}, {{1.0, 1.0}}};
    auto m = family_vector_measure(fam);
    CHECK(m.atom_values[0][0] == doctest::Approx(0.5));
    CHECK(m.atom_values[1][0] == doctest::Approx(0.5));
    CHECK(m.set_value({}).empty() == false);
    CHECK(m.set_value({})[0] == doctest::Approx(0.0));
  }

  TEST_CASE("componentwise integrals match hand sums and additivity is exact") {
    Rng rng(5);
    MeasureSpace mu{rng.uniform_vector(5, 0.3, 1.5)};
    WeightFamily fam{mu, {rng.uniform_vector(5, 0.0, 2.0), rng.uniform_vector(5, 0.0, 2.0),
                          rng.uniform_vector(5, 0.0, 2.0)}};
    auto m = family_vector_measure(fam);
    for (std::size_t k = 0; k < 3; ++k) {
      double hand = 0.0;
      for (std::size_t j : {std::size_t{0}, std::size_t{2}, std::size_t{4}})
        hand += fam.members[k][j] * mu.masses[j];
      CHECK(m.set_value({0, 2, 4})[k] == doctest::Approx(hand).epsilon(1e-14));
    }
    // m(A u B) = m(A) + m(B) for disjoint A, B, exactly
    auto ab = m.set_value({0, 1, 3});
    auto a = m.set_value({0, 3});
    auto b = m.set_value({1});
    for (std::size_t k = 0; k < 3; ++k) CHECK(ab[k] == a[k] + b[k]);
  }

  TEST_CASE("family sup norm: exact maximum, monotone under new members") {
    Rng rng(7);
    MeasureSpace mu{rng.uniform_vector(4, 0.3, 1.5)};
    WeightFamily one{mu, {std::vector<double>(4, 1.0)}};
    auto plain = SpaceDescriptor::lp(2.0, mu);
    auto f = rng.gaussian_vector(4);
    CHECK(family_lp_norm(f, 2.0, one) == doctest::Approx(norm_eval(plain, f)));

    WeightFamily two = one;
    two.members.push_back(rng.uniform_vector(4, 0.0, 3.0));
    CHECK(family_lp_norm(f, 2.0, two) >= family_lp_norm(f, 2.0, one) - 1e-15);

    // singleton indicator against a single member
    WeightFamily single{mu, {rng.uniform_vector(4, 0.1, 2.0)}};
    std::vector<double> ind(4, 0.0);
    ind[2] = 1.0;
    double expect = std::pow(single.members[0][2] * mu.masses[2], 0.5);
    CHECK(family_lp_norm(ind, 2.0, single) == doctest::Approx(expect));
  }
}

TEST_SUITE("operator_measure") {
  TEST_CASE("identity measure returns indicators") {
    auto space = SpaceDescriptor::lp(1.0, MeasureSpace{{1.0, 1.0, 1.0}});
    auto id = OperatorModel::identity(space);
    auto m = operator_vector_measure(id);
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t i = 0; i < 3; ++i)
        CHECK(m.atom_values[j][i] == doctest::Approx(i == j ? 1.0 : 0.0));
    for (double d : m.control_density) CHECK(d > 0.0);
  }

  TEST_CASE("partition averaging: set values scale with the captured mass") {
    MeasureSpace mu{{0.25, 0.25, 0.25, 0.25}};
    auto cells = std::vector<std::vector<std::size_t>>{{0, 1}, {2, 3}};
    auto space = SpaceDescriptor::lp(2.0, mu);
    OperatorModel op{partition_averaging_matrix(mu, cells), space, space};
    auto m = operator_vector_measure(op);
    // A = {0}: T(chi_A) has value mu(A n cell_0) = 0.25 on cell 0
    auto val = m.set_value({0});
    CHECK(val[0] == doctest::Approx(0.25));
    CHECK(val[1] == doctest::Approx(0.25));
    CHECK(val[2] == doctest::Approx(0.0));
    // A = full cell 0: indicator scaled by its mass
    auto cell = m.set_value({0, 1});
    CHECK(cell[0] == doctest::Approx(0.5));
    CHECK(cell[3] == doctest::Approx(0.0));
  }

  TEST_CASE("zero operator yields the zero measure and null control density") {
    auto space = SpaceDescriptor::lp(2.0, MeasureSpace{{1.0, 1.0}});
    OperatorModel zero{Matrix(2, 2), space, space};
    auto m = operator_vector_measure(zero);
    for (const auto& v : m.atom_values)
      for (double x : v) CHECK(x == 0.0);
    for (double d : m.control_density) CHECK(d == 0.0);
  }

  TEST_CASE("countable additivity tails decrease to zero") {
    MeasureSpace mu{{0.25, 0.25, 0.25, 0.25}};
    auto space = SpaceDescriptor::lp(2.0, mu);
    auto id = OperatorModel::identity(space);
    auto m = operator_vector_measure(id);
    auto chk = countable_additivity_check(m, {{0}, {1}, {2, 3}});
    CHECK(chk.pass);
    CHECK(chk.tails.back() == 0.0);
    for (std::size_t k = 0; k + 1 < chk.tails.size(); ++k)
      CHECK(chk.tails[k + 1] <= chk.tails[k] + 1e-15);

    // single-atom sequence drops in one step
    auto single = countable_additivity_check(m, {{2}});
    CHECK(single.pass);
    CHECK(single.tails.size() == 2);
    CHECK(single.tails[1] == 0.0);
  }
}

TEST_SUITE("l1_vm") {
  TEST_CASE("identity measure recovers the l1 norm") {
    MeasureSpace mu{{0.5, 1.5, 1.0}};
    auto space = SpaceDescriptor::lp(1.0, mu);
    auto id = OperatorModel::identity(space);
    auto m = operator_vector_measure(id);
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
      auto f = rng.gaussian_vector(3);
      double expect = 0.0;
      for (std::size_t j = 0; j < 3; ++j) expect += std::fabs(f[j]) * mu.masses[j];
      auto est = l1_vm_norm(f, m, {}, 8, 5);
      CHECK(est.lower == doctest::Approx(expect).epsilon(1e-12));
    }
    // zero vector and homogeneity
    std::vector<double> zero(3, 0.0);
    CHECK(l1_vm_norm(zero, m, {}, 8, 5).lower == doctest::Approx(0.0));
    auto f = rng.gaussian_vector(3);
    double base = l1_vm_norm(f, m, {}, 8, 5).lower;
    for (auto& v : f) v *= -2.5;
    CHECK(l1_vm_norm(f, m, {}, 8, 5).lower == doctest::Approx(2.5 * base).epsilon(1e-12));
  }

  TEST_CASE("family measure: member functionals stay below the norm") {
    Rng rng(13);
    MeasureSpace mu{rng.uniform_vector(4, 0.3, 1.2)};
    WeightFamily fam{mu,
                     {rng.uniform_vector(4, 0.0, 1.0), rng.uniform_vector(4, 0.0, 1.0)}};
    auto m = family_vector_measure(fam);
    for (int t = 0; t < 50; ++t) {
      auto f = rng.gaussian_vector(4);
      auto est = l1_vm_norm(f, m, {}, 8, 7);
      for (const auto& v : fam.members) {
        double phi = 0.0;
        for (std::size_t j = 0; j < 4; ++j) phi += f[j] * v[j] * mu.masses[j];
        CHECK(std::fabs(phi) <= est.lower + 1e-10);
      }
    }
  }
}

TEST_SUITE("conjugate_family") {
  TEST_CASE("identity with a singleton family returns the member itself") {
    auto space = SpaceDescriptor::lp(2.0, MeasureSpace{{1.0, 1.0, 1.0}});
    auto id = OperatorModel::identity(space);
    WeightFamily fam{space.measure, {{0.5, 0.8, 0.3}}};
    auto rep = conjugate_family_synthesize(id, fam, 2.0, 1e-7, 11);
    REQUIRE(rep.conjugable);
    CHECK(rep.uniform_constant <= 1.0 + 1e-4);
    const auto& w = rep.assignment[0].nu_weight;
    // the synthesized weight dominates the member at constant ~1
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(w[j] >= fam.members[0][j] / std::pow(rep.assignment[0].constant, 2.0) - 1e-6);
    CHECK(rep.assignment[0].verified <= rep.uniform_constant * (1.0 + 1e-6));
    // the replayed square-function ratio sits at 1 for the identity
    double ratio = conjugate_family_replay(id, fam, rep, 2.0, 200, 13);
    CHECK(ratio <= rep.uniform_constant * (1.0 + 1e-6));
    CHECK(ratio >= 0.5);
  }

  TEST_CASE("replay flags a halved assignment through the stage inequality") {
    Rng rng(97);
    auto space = SpaceDescriptor::lp(2.0, MeasureSpace{rng.uniform_vector(4, 0.4, 1.4)});
    OperatorModel op{Matrix(4, 4), space, space};
    for (auto& v : op.matrix.data) v = rng.uniform(0.1, 1.0);
    WeightFamily fam{space.measure, {rng.uniform_vector(4, 0.5, 1.0)}};
    auto rep = conjugate_family_synthesize(op, fam, 2.0, 1e-6, 43);
    REQUIRE(rep.conjugable);
    double good = conjugate_family_replay(op, fam, rep, 2.0, 200, 51);
    CHECK(good <= rep.uniform_constant * (1.0 + 1e-6));

    auto corrupted = rep;
    for (auto& v : corrupted.assignment[0].nu_weight) v *= 0.5;
    double bad = conjugate_family_replay(op, fam, corrupted, 2.0, 200, 51);
    CHECK(bad > rep.uniform_constant * (1.0 + 1e-3));  // flagged
    CHECK(bad >= good * std::sqrt(2.0) * (1.0 - 1e-6));
  }

  TEST_CASE("partition averaging accepts the indicator as a conjugate weight") {
    // probability measure, eight atoms, three cells
    MeasureSpace mu = MeasureSpace::uniform(8, 1.0);
    auto cells = std::vector<std::vector<std::size_t>>{{0, 1, 2}, {3, 4}, {5, 6, 7}};
    auto l2 = SpaceDescriptor::lp(2.0, mu);
    OperatorModel op{partition_averaging_matrix(mu, cells), l2, l2};
    Rng rng(17);
    WeightFamily fam{mu, {}};
    for (int k = 0; k < 5; ++k) {
      auto v = rng.uniform_vector(8, 0.0, 2.0);
      double s = 0.0;
      for (std::size_t j = 0; j < 8; ++j) s += v[j] * mu.masses[j];
      for (auto& x : v) x /= s;  // into the positive part of the l1 unit ball
      fam.members.push_back(v);
    }
    // the indicator hint: T as an operator into each member target has norm <= 1
    for (const auto& v : fam.members) {
      auto chk = weighted_norm_verify(op, WeightVector{std::vector<double>(8, 1.0)},
                                      WeightVector{v}, 2.0, 24, 19);
      CHECK(chk.constant <= 1.0 + 1e-9);
      CHECK_FALSE(chk.infeasible_direction);
    }
    // synthesis achieves a uniform constant at most 1
    auto rep = conjugate_family_synthesize(op, fam, 2.0, 1e-6, 23);
    REQUIRE(rep.conjugable);
    CHECK(rep.uniform_constant <= 1.0 + 1e-3);
  }

  TEST_CASE("positive operator always conjugable near its norm") {
    Rng rng(29);
    auto space = SpaceDescriptor::lp(2.0, MeasureSpace{rng.uniform_vector(5, 0.4, 1.4)});
    OperatorModel op{Matrix(5, 5), space, space};
    for (auto& v : op.matrix.data) v = rng.uniform(0.0, 1.0);
    WeightFamily fam{space.measure,
                     {rng.uniform_vector(5, 0.0, 1.0), rng.uniform_vector(5, 0.0, 1.0)}};
    auto rep = conjugate_family_synthesize(op, fam, 2.0, 1e-6, 31);
    REQUIRE(rep.conjugable);
    double nrm = operator_norm(op, 16, 3).lower;
    CHECK(rep.uniform_constant <= nrm * (1.0 + 1e-3));
    double ratio = conjugate_family_replay(op, fam, rep, 2.0, 400, 37);
    CHECK(ratio <= rep.uniform_constant * (1.0 + 1e-6));
  }

  TEST_CASE("replay flags a corrupted assignment") {
    Rng rng(41);
    auto space = SpaceDescriptor::lp(2.0, MeasureSpace{rng.uniform_vector(4, 0.4, 1.4)});
    OperatorModel op{Matrix(4, 4), space, space};
    for (auto& v : op.matrix.data) v = rng.uniform(0.1, 1.0);
    WeightFamily fam{space.measure, {rng.uniform_vector(4, 0.5, 1.0)}};
    auto rep = conjugate_family_synthesize(op, fam, 2.0, 1e-6, 43);
    REQUIRE(rep.conjugable);
    // the domination certificate itself must fail once the weight is halved
    auto cert_chk = weighted_norm_verify(op, WeightVector{rep.assignment[0].nu_weight},
                                         WeightVector{fam.members[0]}, 2.0, 32, 47);
    auto halved = rep.assignment[0].nu_weight;
    for (auto& v : halved) v *= 0.5;
    auto bad_chk = weighted_norm_verify(op, WeightVector{halved},
                                        WeightVector{fam.members[0]}, 2.0, 32, 47);
    CHECK(cert_chk.constant <= rep.uniform_constant * (1.0 + 1e-6));
    CHECK(bad_chk.constant >= cert_chk.constant * std::sqrt(2.0) * (1.0 - 1e-9));
    CHECK(bad_chk.constant > rep.uniform_constant * (1.0 + 1e-3));
  }

  TEST_CASE("requested constant below the threshold reports a witness") {
    Rng rng(53);
    auto space = SpaceDescriptor::lp(2.0, MeasureSpace{rng.uniform_vector(4, 0.4, 1.4)});
    OperatorModel op{Matrix(4, 4), space, space};
    for (auto& v : op.matrix.data) v = rng.gaussian();
    WeightFamily fam{space.measure, {rng.uniform_vector(4, 0.5, 1.0)}};
    auto good = conjugate_family_synthesize(op, fam, 2.0, 1e-6, 59);
    REQUIRE(good.conjugable);
    auto bad = conjugate_family_synthesize(op, fam, 2.0, 1e-6, 59,
                                           good.uniform_constant * 0.5);
    CHECK_FALSE(bad.conjugable);
    CHECK(bad.failed_member == 0);
    CHECK_FALSE(bad.witness.empty());
  }
}

TEST_SUITE("pth_power_and_norming") {
  TEST_CASE("factorability on the operator's own scale is the weight-1 norm") {
    Rng rng(61);
    MeasureSpace mu{rng.uniform_vector(4, 0.5, 1.5)};
    auto lp = SpaceDescriptor::lp(2.0, mu);
    OperatorModel op{Matrix(4, 4), lp, lp};
    for (auto& v : op.matrix.data) v = rng.gaussian();
    auto chk = pth_power_factorable_check(op, lp, 2.0, 64, 67);
    // the p-th power functional of L^p is the L^1 norm of the same weight
    OperatorModel from_l1{op.matrix, SpaceDescriptor::lp(1.0, mu), lp};
    double expect = operator_norm(from_l1, 32, 3).lower;
    CHECK(chk.factorability_lower == doctest::Approx(expect).epsilon(1e-6));

    OperatorModel zero{Matrix(4, 4), lp, lp};
    CHECK(pth_power_factorable_check(zero, lp, 2.0, 16, 3).factorability_lower ==
          doctest::Approx(0.0));
  }

  TEST_CASE("norming constants on the l1 scale") {
    auto l1 = SpaceDescriptor::lp(1.0, MeasureSpace{{1.0, 1.0}});
    // bare coordinate weights: the flat vector halves the lower constant
    std::vector<std::vector<double>> coords{{1.0, 0.0}, {0.0, 1.0}};
    auto nc = positively_norming_constants(coords, l1, 32, 3);
    CHECK(nc.c1 == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(nc.c1_exact);
    CHECK(nc.c2 == doctest::Approx(1.0));
    CHECK(nc.positively_norming);
    CHECK(nc.sign_identity_residual <= 1e-12);

    // the full set of indicator weights restores both constants to 1
    std::vector<std::vector<double>> box{{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
    auto nb = positively_norming_constants(box, l1, 32, 3);
    CHECK(nb.c1 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(nb.c2 == doctest::Approx(1.0));

    // the indicator norms L^1 exactly
    std::vector<std::vector<double>> indicator{{1.0, 1.0}};
    auto ni = positively_norming_constants(indicator, l1, 32, 3);
    CHECK(ni.c1 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ni.c2 == doctest::Approx(1.0));

    // a half-supported weight is flagged
    std::vector<std::vector<double>> half{{1.0, 0.0}};
    auto nh = positively_norming_constants(half, l1, 32, 3);
    CHECK(nh.c1 == 0.0);
    CHECK(nh.c1_exact);
    CHECK_FALSE(nh.positively_norming);
  }

  TEST_CASE("identity pipeline has unit constants and a norming audit") {
    MeasureSpace mu = MeasureSpace::uniform(4, 1.0);
    auto l2 = SpaceDescriptor::lp(2.0, mu);
    auto id = OperatorModel::identity(l2);
    WeightFamily fam{mu, {std::vector<double>(4, 1.0)}};
    auto rep = conjugate_family_pipeline(id, l2, fam, 2.0, 1e-6, 71);
    REQUIRE(rep.conjugate.conjugable);
    CHECK(rep.replay_ratio <= rep.conjugate.uniform_constant * (1.0 + 1e-6));
    CHECK(rep.audit.positively_norming);
    CHECK(rep.dual_box_bound > 0.0);
  }
}

TEST_SUITE("kernel_model") {
  TEST_CASE("constant kernel: rank one with conjugate constant = total x-mass") {
    Rng rng(73);
    MeasureSpace mux{rng.uniform_vector(4, 0.3, 1.0)};
    MeasureSpace muy = MeasureSpace::uniform(3, 1.0);
    WeightFamily fam{muy, {}};
    for (int k = 0; k < 3; ++k) {
      auto v = rng.uniform_vector(3, 0.2, 1.5);
      double s = 0.0;
      for (std::size_t i = 0; i < 3; ++i) s += v[i] * muy.masses[i];
      for (auto& x : v) x /= s;  // normalized members
      fam.members.push_back(v);
    }
    std::vector<std::vector<double>> grid(4, std::vector<double>(3, 1.0));
    auto km = kernel_vector_measure(grid, mux, muy, fam, 1.0);
    // T f = (integral of f) on every y atom
    auto out = km.op.apply(std::vector<double>{1.0, 1.0, 1.0, 1.0});
    double mass = mux.total_mass();
    for (double v : out) CHECK(v == doctest::Approx(mass));

    auto pipeline = conjugate_family_pipeline(km.op, km.op.domain, fam, 1.0, 1e-6, 79);
    REQUIRE(pipeline.conjugate.conjugable);
    CHECK(pipeline.conjugate.uniform_constant == doctest::Approx(mass).epsilon(1e-3));
  }

  TEST_CASE("banded positive kernel passes the pipeline") {
    MeasureSpace mux = MeasureSpace::uniform(5, 1.0);
    MeasureSpace muy = MeasureSpace::uniform(5, 1.0);
    std::vector<std::vector<double>> grid(5, std::vector<double>(5, 0.0));
    for (std::size_t j = 0; j < 5; ++j)
      for (std::size_t i = 0; i < 5; ++i)
        if (std::max(i, j) - std::min(i, j) <= 1) grid[j][i] = 1.0;
    WeightFamily fam{muy, {std::vector<double>(5, 1.0)}};
    auto km = kernel_vector_measure(grid, mux, muy, fam, 2.0);
    auto rep = conjugate_family_pipeline(km.op, km.op.domain, fam, 2.0, 1e-6, 83);
    REQUIRE(rep.conjugate.conjugable);
    CHECK(rep.replay_ratio <= rep.conjugate.uniform_constant * (1.0 + 1e-6));

    // zero kernel gives the zero measure
    std::vector<std::vector<double>> zgrid(5, std::vector<double>(5, 0.0));
    auto zm = kernel_vector_measure(zgrid, mux, muy, fam, 2.0);
    for (const auto& v : zm.measure.atom_values)
      for (double x : v) CHECK(x == 0.0);
  }
}

TEST_SUITE("stable_embedding") {
  TEST_CASE("slope of the minimal mass matches 1 - p/q") {
    std::vector<double> ns{4, 8, 16, 32};
    std::vector<double> masses;
    for (double n : ns) {
      auto res = stable_embedding_mass_witness(static_cast<std::size_t>(n), 1.0, 2.0,
                                               {}, 424242);
      CHECK(res.bracket_spread <= 0.10 + 1e-12);
      masses.push_back(res.minimal_mass);
    }
    for (std::size_t i = 0; i + 1 < masses.size(); ++i)
      CHECK(masses[i + 1] > masses[i]);
    double slope = loglog_slope(ns, masses);
    CHECK(slope >= 0.35);
    CHECK(slope <= 0.65);
  }

  TEST_CASE("degenerate p == q has slope zero") {
    std::vector<double> ns{4, 8, 16};
    std::vector<double> masses;
    for (double n : ns) {
      EmbeddingConstants ec{1.0, 1.0, 1.0};
      auto res = stable_embedding_mass_witness(static_cast<std::size_t>(n), 2.0, 2.0,
                                               ec, 7);
      masses.push_back(res.minimal_mass);
    }
    CHECK(loglog_slope(ns, masses) == doctest::Approx(0.0).epsilon(1e-9));
  }

  TEST_CASE("single atom equals the single-cell bound") {
    EmbeddingConstants ec{0.8, 1.0, 1.0};
    auto res = stable_embedding_mass_witness(1, 1.0, 2.0, ec, 7);
    CHECK(res.minimal_mass == doctest::Approx(0.8));
  }

  TEST_CASE("the finite embedding is not conjugable below the mass threshold") {
    // the counterexample path: a gaussian embedding block with a requested
    // constant below the feasible level reports a witness
    Rng rng(89);
    std::size_t n = 4;
    int dim = 64;
    MeasureSpace mux = MeasureSpace::uniform(n, 1.0);
    MeasureSpace muy = MeasureSpace::uniform(static_cast<std::size_t>(dim), 1.0);
    OperatorModel emb{Matrix(static_cast<std::size_t>(dim), n),
                      SpaceDescriptor::lp(2.0, mux),
                      SpaceDescriptor::lp(1.0, muy)};
    for (auto& v : emb.matrix.data) v = rng.gaussian();
    WeightFamily fam{muy, {std::vector<double>(static_cast<std::size_t>(dim), 1.0)}};
    auto good = conjugate_family_synthesize(emb, fam, 1.0, 1e-5, 97);
    REQUIRE(good.conjugable);
    auto bad = conjugate_family_synthesize(emb, fam, 1.0, 1e-5, 97,
                                           good.uniform_constant * 0.3);
    CHECK_FALSE(bad.conjugable);
    CHECK(bad.failed_member == 0);
    CHECK_FALSE(bad.witness.empty());
  }
}
