#include "doctest.h"

#include "entroflow/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

using namespace entroflow;

TEST_SUITE("sphere") {

TEST_CASE("quadrature nodes integrate low moments exactly") {
  sphere::GaussLegendre gl = sphere::gauss_legendre(24);
  REQUIRE(gl.z.size() == 24);
  long double s0 = 0, s2 = 0;
  for (std::size_t i = 0; i < gl.z.size(); ++i) {
    if (i > 0) CHECK(gl.z[i] > gl.z[i - 1]);
    s0 += gl.w[i];
    s2 += gl.w[i] * gl.z[i] * gl.z[i];
  }
  CHECK(static_cast<double>(s0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(static_cast<double>(s2) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  // symmetric rule
  CHECK(static_cast<double>(gl.z.front() + gl.z.back()) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("collocation operator annihilates constants and reproduces the first mode") {
  sphere::ZonalOperator op = sphere::make_zonal_operator(3, 48);
  const int n = op.n;
  // measure weights are a probability vector
  long double tot = 0;
  for (int i = 0; i < n; ++i) tot += op.nu[i];
  CHECK(static_cast<double>(tot) == doctest::Approx(1.0).epsilon(1e-13));
  for (int i = 0; i < n; ++i) {
    long double row = 0, mode1 = 0;
    for (int j = 0; j < n; ++j) {
      row += op.lap[static_cast<std::size_t>(i) * n + j];
      mode1 += op.lap[static_cast<std::size_t>(i) * n + j] * op.z[j];
    }
    CHECK(std::abs(static_cast<double>(row)) <= 1e-9);
    // (1-z^2) z'' - d z z' = -d z
    CHECK(static_cast<double>(mode1) ==
          doctest::Approx(-3.0 * static_cast<double>(op.z[i])).epsilon(1e-9));
  }
}

TEST_CASE("nonlinear residual vanishes on the constant family") {
  const double p = 3.0, lambda = 2.4;
  sphere::ZonalOperator op = sphere::make_zonal_operator(3, 40);
  std::vector<double> u(static_cast<std::size_t>(op.n),
                        std::pow(lambda, 1.0 / (p - 2.0)));
  std::vector<double> res = sphere::residual(u, lambda, 3, p);
  for (double r : res) CHECK(std::abs(r) <= 1e-11);
}

TEST_CASE("mode-loss points sit at the discrete operator eigenvalues") {
  CHECK(sphere::detect_bifurcation(3, 3.0, 1) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(sphere::detect_bifurcation(3, 3.0, 2) == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(sphere::detect_bifurcation(5, 10.0 / 3.0, 1) == doctest::Approx(5.0).epsilon(1e-9));
  // mesh independence of the location
  CHECK(sphere::detect_bifurcation(3, 3.0, 1, 48) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("continuation leaves the constant family at the right place") {
  sphere::StepConfig cfg;
  cfg.mesh = 48;
  cfg.max_points = 60;
  sphere::Branch br = sphere::continue_branch(1, 3, 3.0, +1, cfg);
  REQUIRE(br.points.size() >= 10);
  CHECK(br.ell == 1);
  CHECK(br.points.front().lambda == doctest::Approx(3.0).epsilon(1e-8));
  for (std::size_t k = 1; k < br.points.size(); ++k)
    CHECK(br.points[k].arclength > br.points[k - 1].arclength);
  // strictly below the diagonal once genuinely non-constant
  for (const auto& pt : br.points)
    if (pt.arclength > 0.2) {
      CHECK(pt.mu < pt.lambda);
      double lo = *std::min_element(pt.profile.begin(), pt.profile.end());
      double hi = *std::max_element(pt.profile.begin(), pt.profile.end());
      CHECK(hi - lo > 1e-3);
    }
}

TEST_CASE("branch map equals the diagonal below onset and drops under it above") {
  sphere::StepConfig cfg;
  cfg.mesh = 48;
  cfg.max_points = 200;
  std::vector<double> grid = {2.0, 2.6, 2.95, 3.4, 4.0, 4.8};
  auto curve = sphere::mu_of_lambda(3, 3.0, grid, cfg);
  REQUIRE(curve.size() == grid.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (grid[i] <= 3.0) {
      CHECK(curve[i].mu == doctest::Approx(grid[i]).epsilon(1e-10));
      CHECK(curve[i].certified);
    } else {
      CHECK(curve[i].mu < grid[i]);
      CHECK(curve[i].certified);
    }
  }
}

TEST_CASE("interpolation constant: spectral endpoint and validation") {
  CHECK(sphere::kappa_p(3, 1.0) == 8.0);
  CHECK(sphere::kappa_p(5, 1.0) == 12.0);
  CHECK_THROWS_AS(sphere::kappa_p(3, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(sphere::kappa_p(3, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(sphere::kappa_p(3, 6.5), std::invalid_argument);
  sphere::StepConfig tiny;
  tiny.mesh = 8;
  CHECK_THROWS_AS(sphere::kappa_p(3, 2.5, tiny), std::invalid_argument);
}

TEST_CASE("interpolation constant decreases in p and stays under the even gap") {
  sphere::StepConfig cfg;
  cfg.mesh = 48;
  double k25 = sphere::kappa_p(3, 2.5, cfg);
  double k35 = sphere::kappa_p(3, 3.5, cfg);
  // even-sector gap 2(d+1) = 8 is the p -> 1 limit; the critical limit
  // 2^{2/3} * 3 bounds the family from below
  CHECK(k25 < 8.0);
  CHECK(k25 > 4.7);
  CHECK(k35 < k25);
  CHECK(k35 > 4.7);
}

}
