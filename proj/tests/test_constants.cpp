#include "doctest.h"

#include "entroflow/constants.hpp"

#include <cmath>
#include <stdexcept>

using namespace entroflow;
using namespace entroflow::constants;

TEST_SUITE("constants") {

TEST_CASE("sharp Sobolev constants against the Gamma closed form") {
  CHECK(sobolev_constant(3) == doctest::Approx(5.4779040895313313).epsilon(1e-12));
  CHECK(sobolev_constant(4) == doctest::Approx(10.260398641294913).epsilon(1e-12));
  CHECK(sobolev_constant(5) == doctest::Approx(14.811911720005934).epsilon(1e-12));
  const double pi = 4.0 * std::atan(1.0);
  for (int d = 3; d <= 12; ++d) {
    double ref = pi * d * (d - 2.0) *
                 std::pow(std::tgamma(d / 2.0) / std::tgamma(static_cast<double>(d)), 2.0 / d);
    CHECK(sobolev_constant(d) == doctest::Approx(ref).epsilon(1e-12));
  }
  CHECK_THROWS_AS(sobolev_constant(2), std::invalid_argument);
}

TEST_CASE("interpolation constants at pinned points") {
  CHECK(gns_optimal_constant(3, 3.0) == doctest::Approx(2.3404922750420116).epsilon(1e-12));
  CHECK(gns_optimal_constant(3, 5.0 / 3.0) ==
        doctest::Approx(1.4698412984940676).epsilon(1e-12));
  CHECK(gns_optimal_constant(1, 2.0) == doctest::Approx(1.042578735060527).epsilon(1e-12));
  // at p = d/(d-2) the square of the interpolation constant is the Sobolev constant
  double c = gns_optimal_constant(3, 3.0);
  CHECK(c * c == doctest::Approx(sobolev_constant(3)).epsilon(1e-12));
}

TEST_CASE("entropy growth prefactor, value and mass scaling") {
  const double MB = 0.77106284383510615;  // mass of the unit stationary profile, d=3 m=0.8
  CHECK(renyi_growth_c0(3, 0.8, MB) == doctest::Approx(0.48971569643859059).epsilon(1e-12));
  CHECK(renyi_growth_c0(1, 0.75, 1.0) == doctest::Approx(0.57559532867153139).epsilon(1e-12));
  // homogeneity in the mass: exponent ((d+2)m - d)/(d(1-m)) = 5/3 at d=3, m=0.8
  double r = renyi_growth_c0(3, 0.8, 2.0) / renyi_growth_c0(3, 0.8, 1.0);
  CHECK(r == doctest::Approx(std::pow(2.0, 5.0 / 3.0)).epsilon(1e-12));
  CHECK_THROWS_AS(renyi_growth_c0(3, 0.6, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(renyi_growth_c0(3, 0.8, -1.0), std::invalid_argument);
}

TEST_CASE("sphere exponent bookkeeping") {
  SphereExponents e = sphere_exponents(3, 3.0);
  CHECK(e.theta == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(e.two_sharp == doctest::Approx(4.75).epsilon(1e-14));
  SphereExponents e4 = sphere_exponents(4, 2.5);
  CHECK(e4.two_sharp == doctest::Approx((2.0 * 16 + 1) / 9.0).epsilon(1e-14));
  // theta = d(p-1) / ((d + 2 - p(d-2)) p)
  double ref = 4.0 * 1.5 / ((4 + 2 - 2.5 * 2) * 2.5);
  CHECK(e4.theta == doctest::Approx(ref).epsilon(1e-14));
}

TEST_CASE("improved-bound coefficient at a hand-evaluated point") {
  CHECK(sphere_delta(3, 4.0, 0.9) == doctest::Approx(0.875).epsilon(1e-13));
  CHECK_THROWS_AS(sphere_delta(3, 2.0, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(sphere_delta(3, 7.0, 0.9), std::invalid_argument);
}

TEST_CASE("symmetry-region classifier, critical family") {
  CknParams q;
  q.d = 3;
  q.a = -1.0;
  q.b = 0.0;
  RegimeVerdict v = felli_schneider(q, CknFamily::critical);
  CHECK(v.boundary_value == doctest::Approx(-0.40858968733650158).epsilon(1e-12));
  CHECK(v.region == Region::symmetry);
  CHECK(v.margin == doctest::Approx(0.0 - v.boundary_value).epsilon(1e-12));

  q.a = -0.5;
  v = felli_schneider(q, CknFamily::critical);
  CHECK(v.boundary_value == doctest::Approx(-0.13397459621556129).epsilon(1e-12));

  q.b = -0.3;  // below the threshold: symmetry breaking
  v = felli_schneider(q, CknFamily::critical);
  CHECK(v.region == Region::symmetry_breaking);
  CHECK(v.margin < 0);

  q.a = 0.6;  // a beyond a_c = 0.5: outside the admissible cone
  q.b = 0.7;
  v = felli_schneider(q, CknFamily::critical);
  CHECK(v.region == Region::inadmissible);
}

TEST_CASE("symmetry-region classifier, subcritical family") {
  CknParams q;
  q.d = 3;
  q.gamma = -4.0;  // (gamma-d)^2 - 4(d-1) = 41 > 0: real threshold
  q.beta = -5.0;   // inside the admissible window (gamma-2, (d-2)gamma/d)
  RegimeVerdict v = felli_schneider(q, CknFamily::subcritical);
  CHECK(v.region != Region::inadmissible);
  CHECK(v.boundary_value == doctest::Approx(1.0 - std::sqrt(41.0)).epsilon(1e-13));

  q.gamma = 2.0;  // (gamma-d)^2 = 1 < 8: complex threshold, breaking everywhere
  q.beta = 0.5;
  v = felli_schneider(q, CknFamily::subcritical);
  CHECK(v.region == Region::symmetry_breaking);
  CHECK(std::isnan(v.boundary_value));
  CHECK(std::isnan(v.margin));

  q.gamma = 5.0;  // gamma >= d: inadmissible
  v = felli_schneider(q, CknFamily::subcritical);
  CHECK(v.region == Region::inadmissible);
}

TEST_CASE("reduced spectral ratio of the weighted frame") {
  CHECK(alpha_fs(3, 4.0) == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-14));
  CHECK(alpha_fs(2, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(alpha_fs(1, 3.0), std::invalid_argument);
  CHECK_THROWS_AS(alpha_fs(3, 1.0), std::invalid_argument);
}

TEST_CASE("weightless point of the weighted constant comes from quadrature") {
  CknParams q;
  q.d = 3;  // a = b = 0
  CknConstant c = ckn_symmetric_constant(q);
  CHECK_FALSE(c.formula_reliable);
  CHECK(c.quadrature_value == doctest::Approx(1.0 / sobolev_constant(3)).epsilon(1e-6));
}

TEST_CASE("threshold time, pinned value and monotonicity") {
  double ref = std::log(43.0) / 2.8;
  CHECK(threshold_time(3, 0.8, 1.0, 1.0, 0.1) == doctest::Approx(ref).epsilon(1e-13));
  // tighter targets and larger data both push the threshold out
  double base = threshold_time(3, 0.8, 1.0, 1.0, 0.1);
  CHECK(threshold_time(3, 0.8, 1.0, 1.0, 0.05) > base);
  CHECK(threshold_time(3, 0.8, 4.0, 1.0, 0.1) > base);
  CHECK(threshold_time(3, 0.8, 1.0, 4.0, 0.1) > base);
  // eps window (0, min(chi*eta, eps0)) is enforced
  CHECK_THROWS_AS(threshold_time(3, 0.8, 1.0, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(threshold_time(3, 0.8, 1.0, 1.0, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(threshold_time(3, 0.5, 1.0, 1.0, 0.1), std::invalid_argument);
}

TEST_CASE("unit sphere areas") {
  const double pi = 4.0 * std::atan(1.0);
  CHECK(sphere_area(1) == doctest::Approx(2.0));
  CHECK(sphere_area(2) == doctest::Approx(2.0 * pi).epsilon(1e-14));
  CHECK(sphere_area(3) == doctest::Approx(4.0 * pi).epsilon(1e-14));
}

}
