#include "entroflow/functionals.hpp"
#include "entroflow/constants.hpp"
#include "entroflow/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace entroflow::functionals {

namespace {
constexpr double kTiny = 1e-280;

void require_tail_resolved(const RadialProfile& f, const std::vector<double>& integrand,
                           double total, const char* what) {
  std::size_t n = f.size();
  double edge = std::abs(integrand[n - 1]) + std::abs(integrand[n - 2]);
  if (!(total > 0) || edge > 1e-6 * std::abs(total))
    throw std::invalid_argument(std::string(what) +
                                ": not resolved on this grid (divergent or truncated tail)");
}
}

DiagnosticsRecord free_diagnostics(const RadialProfile& u, const ProblemParams& params) {
  params.validate();
  const double m = params.m;
  for (double v : u.values)
    if (v < 0) throw std::invalid_argument("free_diagnostics: negative values");
  DiagnosticsRecord rec;
  std::vector<double> um(u.size()), P(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    double v = std::max(u.values[i], kTiny);
    um[i] = std::pow(v, m);
    P[i] = m / (m - 1.0) * std::pow(v, m - 1.0);
  }
  rec.mass = u.integrate_values();
  rec.E = u.integrate_nodal(um);
  std::vector<double> Pp = deriv1(u.r, P);
  for (double& x : Pp) x *= x;
  rec.I_free = u.integrate_product(u.values, Pp);
  rec.G = rec.I_free * std::pow(rec.E, 2.0 * (m - params.m1()) / (1.0 - m));
  return rec;
}

RelativePair relative_pair(const RadialProfile& v, const ProblemParams& params) {
  params.validate();
  const double m = params.m;
  RadialProfile B = barenblatt(params, v);
  double massB = B.integrate_values();
  double massV = v.integrate_values();
  if (std::abs(massV - massB) > 1e-8 * massB)
    throw std::invalid_argument("relative_pair: mass differs from the attractor mass");

  RelativePair out;
  double F = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double Bm1 = 1.0 + v.r[i] * v.r[i];  // B^{m-1} in closed form
    double vm = std::pow(std::max(v.values[i], 0.0), m);
    double Bm = std::pow(B.values[i], m);
    F += v.w[i] * (Bm1 * (v.values[i] - B.values[i]) - (vm - Bm) / m);
  }
  out.F = F;

  std::vector<double> vm1(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    vm1[i] = std::pow(std::max(v.values[i], kTiny), m - 1.0);
  std::vector<double> dv = deriv1(v.r, vm1);
  double I = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double drift = dv[i] - 2.0 * v.r[i];  // vanishes identically at the attractor
    I += v.w[i] * std::max(v.values[i], 0.0) * drift * drift;
  }
  out.I_rel = I;
  out.Q = F > 0 ? I / F : std::numeric_limits<double>::quiet_NaN();
  return out;
}

StabilityReport gns_stability(const RadialProfile& f, const ProblemParams& params) {
  const int d = params.d;
  const double p = params.p;
  if (p <= 1) throw std::invalid_argument("gns_stability: p must exceed 1");
  for (double v : f.values)
    if (v < 0) throw std::invalid_argument("gns_stability: negative values");
  std::size_t n = f.size();

  std::vector<double> f2p(n), fp1(n), fpow(n);
  for (std::size_t i = 0; i < n; ++i) {
    f2p[i] = std::pow(f.values[i], 2.0 * p);
    fp1[i] = std::pow(f.values[i], p + 1.0);
    fpow[i] = std::pow(f.values[i], p);
  }
  double M0 = f.integrate_nodal(f2p);
  std::vector<double> r2f2p(n);
  double M2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    r2f2p[i] = f.r[i] * f.r[i] * f2p[i] * f.w[i];
    M2 += r2f2p[i];
  }
  require_tail_resolved(f, r2f2p, M2, "gns_stability: second moment");
  if (!(M0 > 0)) throw std::invalid_argument("gns_stability: zero mass");

  std::vector<double> fd = deriv1(f.r, f.values);
  double A = 0, Y = 0, Bc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    A += f.w[i] * fd[i] * fd[i];
    Y += f.w[i] * fp1[i];
    Bc += f.w[i] * f.r[i] * fpow[i] * fd[i];
  }

  // canonical optimizer moments, whole-space normalization
  double sig = constants::sphere_area(d);
  double e = 1.0 / (p - 1.0);
  auto gpow = [&](double q) {
    return sig * integrate_zero_inf([&](double r) {
      return std::pow(1.0 + r * r, -e * q) * std::pow(r, d - 1);
    });
  };
  double G0 = gpow(2.0 * p);
  double G2 = sig * integrate_zero_inf([&](double r) {
    return r * r * std::pow(1.0 + r * r, -e * 2.0 * p) * std::pow(r, d - 1);
  });
  double Yg = gpow(p + 1.0);
  double Y3g = gpow(3.0 * p - 1.0);

  double lam = std::sqrt(M2 * G0 / (M0 * G2));
  double kap = std::pow(G0 * std::pow(lam, d) / M0, 1.0 / (2.0 * p));
  double lamd = std::pow(lam, d);

  double fisher = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = (p - 1.0) * kap * lam * fd[i] + 2.0 * std::pow(kap, p) / lam * f.r[i] * fpow[i];
    fisher += f.w[i] * s * s;
  }
  fisher /= lamd;

  double Yn = std::pow(kap, p + 1.0) / lamd * Y;
  double rel_entropy = 2.0 * p / (1.0 - p) * (Yn - Yg);
  double deficit = (p + 1.0) / (p - 1.0) * fisher - 4.0 * rel_entropy;

  double l1 = 0;
  double k2p = std::pow(kap, 2.0 * p);
  for (std::size_t i = 0; i < n; ++i) {
    double gref = std::pow(1.0 + (f.r[i] / lam) * (f.r[i] / lam), -e * 2.0 * p);
    l1 += f.w[i] * std::abs(k2p * f2p[i] - gref);
  }
  l1 /= lamd;

  StabilityReport rep;
  rep.deficit = deficit;
  rep.rel_entropy = rel_entropy;
  rep.fisher_distance = fisher;
  rep.pck_lower = (p + 1.0) / (8.0 * p) / Y3g * l1 * l1;
  rep.best_match = {lam, 1.0 / kap, M0, M2};
  return rep;
}

HeisenbergPair heisenberg_check(const RadialProfile& f, double p) {
  if (p <= 1) throw std::invalid_argument("heisenberg_check: p must exceed 1");
  std::size_t n = f.size();
  double d = f.weight_dim;
  std::vector<double> fd = deriv1(f.r, f.values);
  double grad = 0, mom1 = 0, mom2 = 0;
  std::vector<double> tail(n);
  for (std::size_t i = 0; i < n; ++i) {
    grad += f.w[i] * fd[i] * fd[i];
    mom1 += f.w[i] * std::pow(std::abs(f.values[i]), p + 1.0);
    tail[i] = f.w[i] * f.r[i] * f.r[i] * std::pow(std::abs(f.values[i]), 2.0 * p);
    mom2 += tail[i];
  }
  require_tail_resolved(f, tail, mom2, "heisenberg_check: second moment");
  HeisenbergPair out;
  out.lhs = d / (p + 1.0) * mom1;
  out.lhs *= out.lhs;
  out.rhs = grad * mom2;
  return out;
}

double sphere_improved_deficit(const std::function<double(double)>& f, int d, double p,
                               int mesh) {
  if (d < 1) throw std::invalid_argument("sphere_improved_deficit: d must be >= 1");
  if (mesh < 8) throw std::invalid_argument("sphere_improved_deficit: mesh too small");
  constants::SphereExponents ex = constants::sphere_exponents(d, p);
  bool in_range = (p >= 1 && p < 2) || (p > 2 && p < ex.two_sharp);
  if (!in_range)
    throw std::invalid_argument("sphere_improved_deficit: p outside [1,2) or (2, 2#)");
  double gamma = ex.gamma_p;
  if (std::abs(gamma - (2.0 - p)) < 1e-12)
    throw std::invalid_argument(
        "sphere_improved_deficit: gamma(p) = 2-p needs the logarithmic variant (not implemented)");

  sphere::GaussLegendre gl = sphere::gauss_legendre(mesh);
  std::vector<double> nu(mesh), fv(mesh), fpv(mesh);
  double total = 0;
  for (int j = 0; j < mesh; ++j) {
    double z = double(gl.z[j]);
    nu[j] = double(gl.w[j]) * std::pow(1.0 - z * z, 0.5 * d - 1.0);
    total += nu[j];
  }
  for (double& x : nu) x /= total;
  for (int j = 0; j < mesh; ++j) {
    double z = double(gl.z[j]);
    double h = std::min(1e-4, 0.25 * (1.0 - std::abs(z)));
    fv[j] = f(z);
    fpv[j] = (-f(z + 2 * h) + 8 * f(z + h) - 8 * f(z - h) + f(z - 2 * h)) / (12.0 * h);
  }
  double grad = 0, n2 = 0, np = 0;
  for (int j = 0; j < mesh; ++j) {
    double z = double(gl.z[j]);
    grad += nu[j] * (1.0 - z * z) * fpv[j] * fpv[j];
    n2 += nu[j] * fv[j] * fv[j];
    np += nu[j] * std::pow(std::abs(fv[j]), p);
  }
  double norm_p = std::pow(np, 1.0 / p);
  double eg = 2.0 * gamma / (2.0 - p);
  double rhs = d / (2.0 - p - gamma) *
               (n2 - std::pow(norm_p, 2.0 - eg) * std::pow(std::sqrt(n2), eg));
  return grad - rhs;
}

}
