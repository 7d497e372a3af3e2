#include "entroflow/core.hpp"
#include "entroflow/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace entroflow {

void ProblemParams::validate() const {
  if (d < 1) throw std::invalid_argument("ProblemParams: d must be >= 1");
  if (M <= 0) throw std::invalid_argument("ProblemParams: mass must be positive");
  if (n < d) throw std::invalid_argument("ProblemParams: artificial dimension n must be >= d");
  if (!(m > 0 && m < 1)) throw std::invalid_argument("ProblemParams: m must lie in (0,1)");
  if (m < m1() - 1e-12)
    throw std::invalid_argument("ProblemParams: m must be >= (d-1)/d");
  if (d <= 2 && m <= 0.5)
    throw std::invalid_argument("ProblemParams: m must exceed 1/2 in dimensions 1 and 2");
  if (p <= 1) throw std::invalid_argument("ProblemParams: p must exceed 1");
  if (std::abs(p - 1.0 / (2.0 * m - 1.0)) > 1e-9 * std::max(1.0, p))
    throw std::invalid_argument("ProblemParams: p and m violate p = 1/(2m-1)");
}

ProblemParams ProblemParams::fast_diffusion(int d, double m, double M) {
  ProblemParams q;
  q.d = d;
  q.n = d;
  q.m = m;
  q.p = 1.0 / (2.0 * m - 1.0);
  q.M = M;
  q.validate();
  return q;
}

ProblemParams ProblemParams::from_p(int d, double p, double M) {
  ProblemParams q;
  q.d = d;
  q.n = d;
  q.p = p;
  q.m = (p + 1.0) / (2.0 * p);
  q.M = M;
  q.validate();
  return q;
}

double CknParams::p() const {
  double den = d - 2 + 2.0 * (b - a);
  if (den <= 0) throw std::invalid_argument("CknParams: d - 2 + 2(b-a) must be positive");
  return 2.0 * d / den;
}

double CknParams::alpha() const {
  double den = a_c() - a + b;
  if (den == 0) throw std::invalid_argument("CknParams: a_c - a + b must be nonzero");
  return (1.0 + a - b) * (a_c() - a) / den;
}

double CknParams::n_eff() const {
  double pp = p();
  if (pp <= 2) throw std::invalid_argument("CknParams: p must exceed 2 for the radial reduction");
  return 2.0 * pp / (pp - 2.0);
}

double surface_factor(double n) {
  if (n < 1) throw std::invalid_argument("surface_factor: weight dimension must be >= 1");
  if (n == 1.0) return 1.0;  // half-line convention
  return 2.0 * std::exp(0.5 * n * std::log(M_PI) - std::lgamma(0.5 * n));
}

double RadialProfile::integrate_values() const {
  return kernels::dot2(w.data(), values.data(), w.size());
}

double RadialProfile::integrate(const std::function<double(double, double)>& f) const {
  double s = 0;
  for (std::size_t i = 0; i < r.size(); ++i) s += w[i] * f(r[i], values[i]);
  return s;
}

double RadialProfile::integrate_nodal(const std::vector<double>& g) const {
  if (g.size() != w.size()) throw std::invalid_argument("integrate_nodal: size mismatch");
  return kernels::dot2(w.data(), g.data(), g.size());
}

double RadialProfile::integrate_product(const std::vector<double>& g1,
                                        const std::vector<double>& g2) const {
  if (g1.size() != w.size() || g2.size() != w.size())
    throw std::invalid_argument("integrate_product: size mismatch");
  return kernels::dot3(w.data(), g1.data(), g2.data(), g1.size());
}

namespace {
// integral of r^{n-1+k} over [x1, x2]
double power_cell(double x1, double x2, double n, int k) {
  double e = n + k;
  return (std::pow(x2, e) - std::pow(x1, e)) / e;
}
}

RadialProfile make_grid(int n_nodes, double R_max, double stretch, double weight_dim) {
  if (n_nodes < 16) throw std::invalid_argument("make_grid: need at least 16 nodes");
  if (R_max <= 0) throw std::invalid_argument("make_grid: R_max must be positive");
  if (stretch < 1) throw std::invalid_argument("make_grid: stretch must be >= 1");
  if (weight_dim < 1) throw std::invalid_argument("make_grid: weight dimension must be >= 1");

  RadialProfile g;
  g.weight_dim = weight_dim;
  g.r.resize(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    double s = double(i) / (n_nodes - 1);
    double num = std::pow(s, stretch);
    double den = num + std::pow(1.0 - s, stretch);
    g.r[i] = R_max * (den > 0 ? num / den : 0.0);
  }
  g.r.front() = 0.0;
  g.r.back() = R_max;
  for (int i = 0; i + 1 < n_nodes; ++i)
    if (!(g.r[i + 1] > g.r[i])) throw std::invalid_argument("make_grid: non-monotone node map");

  // hat-function moments of r^{n-1} dr, then the surface factor
  double sigma = surface_factor(weight_dim);
  g.w.assign(n_nodes, 0.0);
  for (int i = 0; i + 1 < n_nodes; ++i) {
    double x1 = g.r[i], x2 = g.r[i + 1], h = x2 - x1;
    double i0 = power_cell(x1, x2, weight_dim, 0);
    double i1 = power_cell(x1, x2, weight_dim, 1);
    g.w[i] += sigma * (x2 * i0 - i1) / h;
    g.w[i + 1] += sigma * (i1 - x1 * i0) / h;
  }
  g.values.assign(n_nodes, 0.0);
  return g;
}

RadialProfile grid_from_nodes(const std::vector<double>& nodes, double weight_dim) {
  if (nodes.size() < 16) throw std::invalid_argument("grid_from_nodes: need at least 16 nodes");
  if (weight_dim < 1)
    throw std::invalid_argument("grid_from_nodes: weight dimension must be >= 1");
  if (!(nodes.front() >= 0))
    throw std::invalid_argument("grid_from_nodes: nodes must be nonnegative");
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    if (!(nodes[i + 1] > nodes[i]))
      throw std::invalid_argument("grid_from_nodes: nodes must be strictly increasing");

  RadialProfile g;
  g.weight_dim = weight_dim;
  g.r = nodes;
  double sigma = surface_factor(weight_dim);
  g.w.assign(nodes.size(), 0.0);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    double x1 = g.r[i], x2 = g.r[i + 1], h = x2 - x1;
    double i0 = power_cell(x1, x2, weight_dim, 0);
    double i1 = power_cell(x1, x2, weight_dim, 1);
    g.w[i] += sigma * (x2 * i0 - i1) / h;
    g.w[i + 1] += sigma * (i1 - x1 * i0) / h;
  }
  g.values.assign(nodes.size(), 0.0);
  return g;
}

RadialProfile barenblatt(const ProblemParams& params, const RadialProfile& grid,
                         bool normalize_mass) {
  if (params.m >= 1) throw std::invalid_argument("barenblatt: m must be below 1");
  RadialProfile out = grid;
  double e = 1.0 / (params.m - 1.0);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.values[i] = std::pow(1.0 + out.r[i] * out.r[i], e);
  if (normalize_mass) {
    double mass = out.integrate_values();
    if (mass <= 0) throw std::runtime_error("barenblatt: nonpositive mass");
    double c = params.M / mass;
    for (double& v : out.values) v *= c;
  }
  return out;
}

RadialProfile aubin_talenti(const ProblemParams& params, const RadialProfile& grid,
                            OptimizerFamily family, const CknParams* ckn) {
  RadialProfile out = grid;
  switch (family) {
    case OptimizerFamily::sobolev: {
      if (params.d < 3) throw std::invalid_argument("aubin_talenti: sobolev family needs d >= 3");
      double e = -0.5 * (params.d - 2);
      for (std::size_t i = 0; i < out.size(); ++i)
        out.values[i] = std::pow(1.0 + out.r[i] * out.r[i], e);
      break;
    }
    case OptimizerFamily::gns: {
      if (params.p <= 1) throw std::invalid_argument("aubin_talenti: gns family needs p > 1");
      double e = -1.0 / (params.p - 1.0);
      for (std::size_t i = 0; i < out.size(); ++i)
        out.values[i] = std::pow(1.0 + out.r[i] * out.r[i], e);
      break;
    }
    case OptimizerFamily::ckn: {
      if (!ckn) throw std::invalid_argument("aubin_talenti: ckn family needs CknParams");
      double pp = ckn->p();
      double s = (pp - 2.0) * (ckn->a_c() - ckn->a);
      if (s <= 0) throw std::invalid_argument("aubin_talenti: inadmissible ckn exponent");
      double e = -2.0 / (pp - 2.0);
      for (std::size_t i = 0; i < out.size(); ++i)
        out.values[i] = std::pow(1.0 + std::pow(out.r[i], s), e);
      break;
    }
  }
  return out;
}

RadialProfile pressure_of(const RadialProfile& u, double m) {
  if (m >= 1)
    throw std::invalid_argument("pressure_of: m must be below 1 (m = 1 has no pressure form)");
  RadialProfile out = u;
  double c = m / (m - 1.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (i > 0 && i + 1 < u.size() && u.values[i] <= 0)
      throw std::invalid_argument("pressure_of: nonpositive interior value");
    out.values[i] = c * std::pow(std::max(u.values[i], 1e-300), m - 1.0);
  }
  return out;
}

std::vector<double> deriv1(const std::vector<double>& x, const std::vector<double>& f) {
  std::size_t n = x.size();
  if (f.size() != n || n < 3) throw std::invalid_argument("deriv1: bad sizes");
  std::vector<double> g(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double hm = x[i] - x[i - 1], hp = x[i + 1] - x[i];
    g[i] = (hm * hm * f[i + 1] + (hp * hp - hm * hm) * f[i] - hp * hp * f[i - 1]) /
           (hm * hp * (hm + hp));
  }
  {  // one-sided three-point closures
    double h1 = x[1] - x[0], h2 = x[2] - x[1];
    g[0] = -(2 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] -
           h1 / (h2 * (h1 + h2)) * f[2];
    double hm = x[n - 2] - x[n - 3], hp = x[n - 1] - x[n - 2];
    g[n - 1] = hp / (hm * (hm + hp)) * f[n - 3] - (hm + hp) / (hm * hp) * f[n - 2] +
               (2 * hp + hm) / (hp * (hm + hp)) * f[n - 1];
  }
  return g;
}

std::vector<double> deriv2(const std::vector<double>& x, const std::vector<double>& f) {
  std::size_t n = x.size();
  if (f.size() != n || n < 3) throw std::invalid_argument("deriv2: bad sizes");
  std::vector<double> g(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double hm = x[i] - x[i - 1], hp = x[i + 1] - x[i];
    g[i] = 2.0 * (hm * f[i + 1] - (hm + hp) * f[i] + hp * f[i - 1]) / (hm * hp * (hm + hp));
  }
  g[0] = g[1];
  g[n - 1] = g[n - 2];
  return g;
}

double integrate_zero_inf(const std::function<double(double)>& f) {
  // r = exp((pi/2) sinh t); handles algebraic tails at both ends
  const double tmax = 4.0;
  const int N = 1600;
  const double h = 2.0 * tmax / N;
  double s = 0;
  for (int k = 0; k <= N; ++k) {
    double t = -tmax + k * h;
    double sh = M_PI_2 * std::sinh(t);
    double r = std::exp(sh);
    double jac = r * M_PI_2 * std::cosh(t);
    if (!std::isfinite(r) || !std::isfinite(jac)) continue;
    double v = f(r);
    if (!std::isfinite(v)) continue;
    double wgt = (k == 0 || k == N) ? 0.5 : 1.0;
    s += wgt * v * jac;
  }
  return s * h;
}

}
