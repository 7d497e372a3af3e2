#include "doctest.h"

#include "entroflow/core.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace entroflow;

TEST_SUITE("core") {

TEST_CASE("surface factors, half-line convention at n = 1") {
  const double pi = 4.0 * std::atan(1.0);
  CHECK(surface_factor(1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(surface_factor(2) == doctest::Approx(2.0 * pi).epsilon(1e-14));
  CHECK(surface_factor(3) == doctest::Approx(4.0 * pi).epsilon(1e-14));
  // real n through the Gamma form: 2 pi^{n/2} / Gamma(n/2)
  double n = 2.5;
  double ref = 2.0 * std::pow(pi, n / 2) / std::tgamma(n / 2);
  CHECK(surface_factor(n) == doctest::Approx(ref).epsilon(1e-14));
}

TEST_CASE("graded grids integrate constants exactly") {
  for (double stretch : {1.0, 2.0, 3.0}) {
    RadialProfile g = make_grid(200, 10.0, stretch, 3.0);
    REQUIRE(g.size() == 200);
    CHECK(g.r.front() == 0.0);
    CHECK(g.r.back() == doctest::Approx(10.0));
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g.r[i] > g.r[i - 1]);
    // hat-function moments of r^{n-1} dr: int 1 = surface * R^n / n
    double total = 0;
    for (double w : g.w) {
      CHECK(w >= 0.0);
      total += w;
    }
    double ref = surface_factor(3.0) * std::pow(10.0, 3) / 3.0;
    CHECK(total == doctest::Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("uniform stretch gives uniform spacing") {
  RadialProfile g = make_grid(21, 1.0, 1.0, 2.0);
  for (std::size_t i = 1; i < g.size(); ++i)
    CHECK(g.r[i] - g.r[i - 1] == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("grid_from_nodes reproduces make_grid on the same nodes") {
  RadialProfile g = make_grid(50, 5.0, 2.0, 3.0);
  RadialProfile h = grid_from_nodes(g.r, 3.0);
  REQUIRE(h.size() == g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(h.r[i] == g.r[i]);
    CHECK(h.w[i] == doctest::Approx(g.w[i]).epsilon(1e-14));
  }
}

TEST_CASE("grid_from_nodes rejects malformed node lists") {
  CHECK_THROWS_AS(grid_from_nodes({0.0, 0.5, 0.5}, 3.0), std::invalid_argument);
  CHECK_THROWS_AS(grid_from_nodes({-0.1, 0.5}, 3.0), std::invalid_argument);
  CHECK_THROWS_AS(grid_from_nodes({0.0}, 3.0), std::invalid_argument);
}

TEST_CASE("quadrature helpers agree with each other") {
  RadialProfile g = make_grid(100, 4.0, 2.0, 3.0);
  g.values.assign(g.size(), 0.0);
  std::vector<double> other(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.values[i] = std::exp(-g.r[i]);
    other[i] = 1.0 + g.r[i];
  }
  double a = g.integrate_values();
  double b = g.integrate_nodal(g.values);
  double c = g.integrate([](double r, double) { return std::exp(-r); });
  CHECK(a == doctest::Approx(b).epsilon(1e-15));
  CHECK(a == doctest::Approx(c).epsilon(1e-15));
  double p1 = g.integrate_product(g.values, other);
  std::vector<double> prod(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) prod[i] = g.values[i] * other[i];
  CHECK(p1 == doctest::Approx(g.integrate_nodal(prod)).epsilon(1e-13));
}

TEST_CASE("stationary profile values and mass normalization") {
  ProblemParams fd = ProblemParams::fast_diffusion(3, 0.8);
  RadialProfile g = make_grid(400, 20.0, 2.0, 3.0);
  RadialProfile B = barenblatt(fd, g);
  for (std::size_t i = 0; i < g.size(); i += 37) {
    double ref = std::pow(1.0 + g.r[i] * g.r[i], 1.0 / (fd.m - 1.0));
    CHECK(B.values[i] == doctest::Approx(ref).epsilon(1e-14));
  }
  ProblemParams fd2 = ProblemParams::fast_diffusion(3, 0.8, 2.5);
  RadialProfile Bn = barenblatt(fd2, g, true);
  CHECK(Bn.integrate_values() == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("optimizer profile shapes") {
  ProblemParams pp = ProblemParams::from_p(3, 3.0);
  RadialProfile g = make_grid(100, 8.0, 2.0, 3.0);
  RadialProfile s = aubin_talenti(pp, g, OptimizerFamily::sobolev);
  RadialProfile q = aubin_talenti(pp, g, OptimizerFamily::gns);
  for (std::size_t i = 0; i < g.size(); i += 17) {
    double r2 = g.r[i] * g.r[i];
    CHECK(s.values[i] == doctest::Approx(std::pow(1.0 + r2, -0.5)).epsilon(1e-14));
    CHECK(q.values[i] == doctest::Approx(std::pow(1.0 + r2, -0.5)).epsilon(1e-14));
  }
  // at p = d/(d-2) both families coincide; a lower p flattens the tail
  ProblemParams pl = ProblemParams::from_p(3, 2.0);
  RadialProfile ql = aubin_talenti(pl, g, OptimizerFamily::gns);
  for (std::size_t i = 0; i < g.size(); i += 17) {
    double r2 = g.r[i] * g.r[i];
    CHECK(ql.values[i] == doctest::Approx(std::pow(1.0 + r2, -1.0)).epsilon(1e-14));
  }
}

TEST_CASE("weighted optimizer uses the reduced tail exponent") {
  CknParams ckn;
  ckn.d = 3;
  ckn.a = -0.5;
  ckn.b = 0.0;
  ProblemParams pp = ProblemParams::from_p(3, ckn.p());
  RadialProfile g = make_grid(80, 6.0, 2.0, ckn.n_eff());
  RadialProfile f = aubin_talenti(pp, g, OptimizerFamily::ckn, &ckn);
  double p = ckn.p(), ac = ckn.a_c();
  for (std::size_t i = 0; i < g.size(); i += 13) {
    double ref = std::pow(1.0 + std::pow(g.r[i], (p - 2.0) * (ac - ckn.a)), -2.0 / (p - 2.0));
    CHECK(f.values[i] == doctest::Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("pressure is the m-power transform with the expected slope") {
  ProblemParams fd = ProblemParams::fast_diffusion(3, 0.8);
  RadialProfile g = make_grid(60, 5.0, 2.0, 3.0);
  RadialProfile B = barenblatt(fd, g);
  RadialProfile P = pressure_of(B, fd.m);
  // at the stationary profile the pressure is an exact parabola
  for (std::size_t i = 0; i < g.size(); i += 11) {
    double ref = fd.m / (fd.m - 1.0) * (1.0 + g.r[i] * g.r[i]);
    CHECK(P.values[i] == doctest::Approx(ref).epsilon(1e-13));
  }
  CHECK_THROWS_AS(pressure_of(B, 1.0), std::invalid_argument);
}

TEST_CASE("stencil derivatives are exact on quadratics") {
  RadialProfile g = make_grid(40, 3.0, 2.5, 3.0);
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = 2.0 + 3.0 * g.r[i] - 1.5 * g.r[i] * g.r[i];
  auto d1 = deriv1(g.r, f);
  auto d2 = deriv2(g.r, f);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(d1[i] == doctest::Approx(3.0 - 3.0 * g.r[i]).epsilon(1e-10));
    CHECK(d2[i] == doctest::Approx(-3.0).epsilon(1e-9));
  }
}

TEST_CASE("stencil derivatives converge at second order on smooth data") {
  auto err = [](int n) {
    RadialProfile g = make_grid(n, 2.0, 1.0, 3.0);
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::sin(g.r[i]);
    auto d1 = deriv1(g.r, f);
    double worst = 0;
    for (std::size_t i = 1; i + 1 < g.size(); ++i)
      worst = std::max(worst, std::abs(d1[i] - std::cos(g.r[i])));
    return worst;
  };
  double e1 = err(51), e2 = err(101);
  CHECK(e1 / e2 > 3.2);  // interior stencil halves the error twice per refinement
}

TEST_CASE("reference quadrature on the half line") {
  const double pi = 4.0 * std::atan(1.0);
  CHECK(integrate_zero_inf([](double r) { return std::exp(-r); }) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(integrate_zero_inf([](double r) { return std::exp(-r * r); }) ==
        doctest::Approx(0.5 * std::sqrt(pi)).epsilon(1e-12));
}

TEST_CASE("parameter validation and the exponent tie") {
  ProblemParams ok = ProblemParams::fast_diffusion(3, 0.8);
  CHECK(ok.p == doctest::Approx(1.0 / (2.0 * 0.8 - 1.0)).epsilon(1e-15));
  CHECK(ok.m1() == doctest::Approx(2.0 / 3.0));
  CHECK(ok.mc() == doctest::Approx(1.0 / 3.0));
  CHECK(ok.alpha() == doctest::Approx(2.0 - 3.0 * 0.2).epsilon(1e-14));
  ProblemParams back = ProblemParams::from_p(3, ok.p);
  CHECK(back.m == doctest::Approx(0.8).epsilon(1e-14));

  CHECK_THROWS_AS(ProblemParams::fast_diffusion(3, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ProblemParams::fast_diffusion(3, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ProblemParams::fast_diffusion(1, 0.4), std::invalid_argument);
}

TEST_CASE("weighted-family exponent bookkeeping") {
  CknParams ckn;
  ckn.d = 3;
  ckn.a = -0.5;
  ckn.b = 0.25;
  CHECK(ckn.a_c() == doctest::Approx(0.5));
  double p = ckn.p();
  CHECK(p == doctest::Approx(2.0 * 3 / (3 - 2 + 2.0 * (ckn.b - ckn.a))).epsilon(1e-14));
  CHECK(ckn.n_eff() == doctest::Approx(2.0 * p / (p - 2.0)).epsilon(1e-13));
  // weightless point: p is critical and the reduction is dimension-neutral
  CknParams flat;
  flat.d = 3;
  CHECK(flat.p() == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(flat.n_eff() == doctest::Approx(3.0).epsilon(1e-14));
}

}
