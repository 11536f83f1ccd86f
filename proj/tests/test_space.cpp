#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "weightforge/rng.hpp"
#include "weightforge/space.hpp"

using namespace weightforge;

namespace {
SpaceDescriptor weighted_l2_two_atoms() {
  return SpaceDescriptor::lp(2.0, MeasureSpace{{1.0, 1.0}});
}
}  // namespace

TEST_SUITE("space_core") {
  TEST_CASE("norm_eval basics") {
    auto l2 = weighted_l2_two_atoms();
    CHECK(norm_eval(l2, std::vector<double>{3.0, 4.0}) == doctest::Approx(5.0));
    CHECK(norm_eval(l2, std::vector<double>{0.0, 0.0}) == 0.0);

    // L1(v dmu), mu=(1,1), v=(2,3), f=(1,1): sum |f| v mu = 5
    auto l1v = SpaceDescriptor::lp(1.0, MeasureSpace{{1.0, 1.0}}, {2.0, 3.0});
    CHECK(norm_eval(l1v, std::vector<double>{1.0, 1.0}) == doctest::Approx(5.0));

    CHECK_THROWS_AS(norm_eval(l2, std::vector<double>{1.0}), std::invalid_argument);

    auto linf = SpaceDescriptor::lp(kInf, MeasureSpace{{1.0, 2.0}}, {2.0, 1.0});
    CHECK(norm_eval(linf, std::vector<double>{1.0, 3.0}) == doctest::Approx(3.0));
  }

  TEST_CASE("descriptor validation") {
    CHECK_THROWS_AS(SpaceDescriptor::lp(0.5, MeasureSpace{{1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(SpaceDescriptor::lp(2.0, MeasureSpace{{1.0, -1.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(SpaceDescriptor::lp(2.0, MeasureSpace{{1.0}}, {0.0}),
                    std::invalid_argument);
  }

  TEST_CASE("pth power space") {
    auto l2 = weighted_l2_two_atoms();
    auto l1 = pth_power_space(l2, 2.0);
    CHECK(l1.exponent == doctest::Approx(1.0));

    // L^p(a dmu)_{[p]} = L^1(a dmu)
    auto lp = SpaceDescriptor::lp(3.0, MeasureSpace{{0.5, 1.5}}, {1.0, 2.0});
    auto pw = pth_power_space(lp, 3.0);
    CHECK(pw.exponent == doctest::Approx(1.0));
    CHECK(pw.weight[1] == doctest::Approx(2.0));

    CHECK_THROWS_AS(pth_power_space(l2, 3.0), std::invalid_argument);

    // identity ||(|f|^p)||_{X_[p]} = ||f||_X^p on random f (1e-12 relative)
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      double q = 1.0 + 3.0 * rng.uniform();
      double p = 1.0 + (q - 1.0) * rng.uniform();
      std::size_t n = 1 + rng.uniform_index(6);
      MeasureSpace mu{rng.uniform_vector(n, 0.2, 2.0)};
      auto x = SpaceDescriptor::lp(q, mu, rng.uniform_vector(n, 0.2, 2.0));
      auto xp = pth_power_space(x, p);
      auto f = rng.gaussian_vector(n);
      std::vector<double> fp(n);
      for (std::size_t i = 0; i < n; ++i) fp[i] = std::pow(std::fabs(f[i]), p);
      double lhs = norm_eval(xp, fp);
      double rhs = std::pow(norm_eval(x, f), p);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }

  TEST_CASE("kothe dual closed forms") {
    // p=1 dual ball is the box with corner a
    auto x = SpaceDescriptor::lp(1.0, MeasureSpace{{1.0, 1.0}}, {2.0, 3.0});
    auto ball = kothe_dual_ball(x);
    REQUIRE(ball.is_box());
    auto corner = ball.box_max();
    CHECK(corner[0] == doctest::Approx(2.0));
    CHECK(corner[1] == doctest::Approx(3.0));
    CHECK(ball.contains(corner));
    CHECK_FALSE(ball.contains(std::vector<double>{2.1, 3.0}, 1e-6));

    // projection clips entrywise
    auto proj = ball.project(std::vector<double>{5.0, -4.0});
    CHECK(proj[0] == doctest::Approx(2.0));
    CHECK(proj[1] == doctest::Approx(-3.0));

    // l2 is self dual
    auto l2 = weighted_l2_two_atoms();
    auto dual = kothe_dual_space(l2);
    CHECK(dual.exponent == doctest::Approx(2.0));
    CHECK(dual.weight[0] == doctest::Approx(1.0));

    // double dual returns the original space
    Rng rng(3);
    for (double p : {1.0, 1.5, 2.0, 3.0, kInf}) {
      auto s = SpaceDescriptor::lp(p, MeasureSpace{{0.7, 1.3, 0.4}},
                                   rng.uniform_vector(3, 0.3, 2.5));
      auto dd = kothe_dual_space(kothe_dual_space(s));
      if (is_inf(p)) {
        CHECK(is_inf(dd.exponent));
      } else {
        CHECK(dd.exponent == doctest::Approx(p));
      }
      for (std::size_t i = 0; i < 3; ++i)
        CHECK(dd.weight[i] == doctest::Approx(s.weight[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("duality pairing attains the norm") {
    // sup over sampled g in the dual ball of <|f|,g> approaches ||f||, and the
    // closed-form norming functional attains it
    Rng rng(17);
    for (double p : {1.0, 1.4, 2.0, 3.5, kInf}) {
      std::size_t n = 4;
      MeasureSpace mu{rng.uniform_vector(n, 0.3, 1.7)};
      auto x = SpaceDescriptor::lp(p, mu, rng.uniform_vector(n, 0.4, 2.2));
      auto ball = kothe_dual_ball(x);
      auto f = rng.gaussian_vector(n);
      double nf = norm_eval(x, f);

      auto pair = [&](std::span<const double> g) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += f[i] * g[i] * mu.masses[i];
        return s;
      };

      auto g_star = norming_functional(x, f);
      CHECK(ball.contains(g_star, 1e-9));
      double best = pair(g_star);
      CHECK(best == doctest::Approx(nf).epsilon(1e-9));

      for (int trial = 0; trial < 1000; ++trial) {
        auto g = ball.project(rng.gaussian_vector(n));
        double v = pair(g);
        CHECK(v <= nf * (1.0 + 1e-9));
        best = std::max(best, v);
      }
      CHECK(best == doctest::Approx(nf).epsilon(1e-6));
    }
  }

  TEST_CASE("norm is a lattice norm: triangle and monotonicity") {
    Rng rng(23);
    for (double p : {1.0, 2.0, 2.7, kInf}) {
      std::size_t n = 5;
      MeasureSpace mu{rng.uniform_vector(n, 0.2, 2.0)};
      auto x = SpaceDescriptor::lp(p, mu, rng.uniform_vector(n, 0.2, 2.0));
      for (int trial = 0; trial < 1000; ++trial) {
        auto f = rng.gaussian_vector(n);
        auto g = rng.gaussian_vector(n);
        std::vector<double> sum(n), absf(n), dominating(n);
        for (std::size_t i = 0; i < n; ++i) {
          sum[i] = f[i] + g[i];
          absf[i] = std::fabs(f[i]);
          dominating[i] = absf[i] * (1.0 + rng.uniform());
        }
        CHECK(norm_eval(x, sum) <=
              norm_eval(x, f) + norm_eval(x, g) + 1e-10);
        CHECK(norm_eval(x, f) == doctest::Approx(norm_eval(x, absf)));
        CHECK(norm_eval(x, absf) <= norm_eval(x, dominating) + 1e-10);
      }
    }
  }

  TEST_CASE("p-convexity lower bound") {
    // L^q is p-convex with constant 1 when q >= p
    auto lq = SpaceDescriptor::lp(3.0, MeasureSpace{{1.0, 0.5, 1.5}}, {1.0, 2.0, 0.7});
    double c = p_convexity_lower_bound(lq, 2.0, 200, 9);
    CHECK(c >= 1.0 - 1e-9);
    CHECK(c <= 1.0 + 1e-9);

    // l1 with p=2 reaches sqrt(2) on two atoms (canonical coordinate family)
    auto l1 = SpaceDescriptor::lp(1.0, MeasureSpace{{1.0, 1.0}});
    double c2 = p_convexity_lower_bound(l1, 2.0, 200, 9);
    CHECK(c2 > 1.0);
    CHECK(c2 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));

    // single atom: scalars, constant 1
    auto single = SpaceDescriptor::lp(1.0, MeasureSpace{{2.0}});
    CHECK(p_convexity_lower_bound(single, 2.0, 50, 1) == doctest::Approx(1.0));
  }
}
