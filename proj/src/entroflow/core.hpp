#pragma once
#include <functional>
#include <string>
#include <vector>

namespace entroflow {

// Parameters of the fast-diffusion / interpolation setup. The exponents are
// tied by p = 1/(2m-1); m ranges over [m1, 1) with m1 = (d-1)/d, and m > 1/2
// is additionally required in dimensions 1 and 2.
struct ProblemParams {
  int d = 3;       // ambient dimension
  double n = 3;    // artificial dimension (>= d); n = d unless stated
  double m = 0.8;  // diffusion exponent
  double p = 2.5;  // interpolation exponent, p = 1/(2m-1)
  double M = 1.0;  // prescribed mass

  double m1() const { return double(d - 1) / d; }
  double mc() const { return double(d - 2) / d; }
  // exponent gap driving the improved spectral bounds
  double alpha() const { return 2.0 - d * (1.0 - m); }

  void validate() const;  // throws std::invalid_argument on violation
  static ProblemParams fast_diffusion(int d, double m, double M = 1.0);
  static ProblemParams from_p(int d, double p, double M = 1.0);
};

// Weighted-interpolation parameters. The critical family is parametrized by
// (a, b), the subcritical one by (beta, gamma). Derived quantities follow the
// radial reduction with artificial dimension n = 2p/(p-2).
struct CknParams {
  int d = 3;
  double a = 0, b = 0;        // critical family
  double beta = 0, gamma = 0; // subcritical family

  double a_c() const { return 0.5 * (d - 2); }
  double p() const;      // 2d / (d - 2 + 2(b-a))
  double alpha() const;  // (1+a-b)(a_c-a) / (a_c-a+b)
  double n_eff() const;  // 2p/(p-2)
};

// Radial profile on [0, R_max]: strictly increasing nodes starting at 0,
// nodal values, and quadrature weights against r^{n-1} dr with the
// unit-sphere surface factor folded in (half-line convention at n = 1).
struct RadialProfile {
  std::vector<double> r;
  std::vector<double> w;
  std::vector<double> values;
  double weight_dim = 3.0;

  std::size_t size() const { return r.size(); }
  double r_max() const { return r.empty() ? 0.0 : r.back(); }
  // quadrature of the stored values
  double integrate_values() const;
  // quadrature of f(r_i, values_i)
  double integrate(const std::function<double(double, double)>& f) const;
  // quadrature of an arbitrary nodal vector
  double integrate_nodal(const std::vector<double>& g) const;
  // quadrature of g1*g2 (kernel-accelerated)
  double integrate_product(const std::vector<double>& g1, const std::vector<double>& g2) const;
};

// surface measure of the unit sphere in n dimensions, Gamma-evaluated for
// real n; n = 1 uses the half-line convention (factor 1)
double surface_factor(double n);

// Graded grid clustered at both ends of [0, R_max] by an algebraic map of
// exponent `stretch` (stretch = 1 is uniform). Weights are the hat-function
// moments of r^{n-1} dr, so constants integrate exactly.
RadialProfile make_grid(int n_nodes, double R_max, double stretch, double weight_dim);

// Grid over externally supplied nodes (strictly increasing, nonnegative),
// with the same hat-function weight rule as make_grid.
RadialProfile grid_from_nodes(const std::vector<double>& nodes, double weight_dim);

// (1 + r^2)^{1/(m-1)} on the grid, optionally rescaled to mass M.
RadialProfile barenblatt(const ProblemParams& params, const RadialProfile& grid,
                         bool normalize_mass = false);

enum class OptimizerFamily { sobolev, gns, ckn };

/// Explicit optimizer profiles: (1+r^2)^{-(d-2)/2}, (1+r^2)^{-1/(p-1)}, or
// (1 + r^{(p-2)(a_c-a)})^{-2/(p-2)} for the weighted family.
RadialProfile aubin_talenti(const ProblemParams& params, const RadialProfile& grid,
                            OptimizerFamily family, const CknParams* ckn = nullptr);

// m/(m-1) * u^{m-1} nodewise; rejects m >= 1 and nonpositive interior values.
RadialProfile pressure_of(const RadialProfile& u, double m);

// Three-point stencils on nonuniform grids (one-sided at the ends).
std::vector<double> deriv1(const std::vector<double>& x, const std::vector<double>& f);
std::vector<double> deriv2(const std::vector<double>& x, const std::vector<double>& f);

// Reference quadrature over (0, infinity) by a double-exponential transform;
// used for closed-form constants and oracle values.
double integrate_zero_inf(const std::function<double(double)>& f);

}
