#include "entroflow/constants.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace entroflow::constants {

double sphere_area(int d) {
  if (d < 1) throw std::invalid_argument("sphere_area: d must be >= 1");
  return 2.0 * std::exp(0.5 * d * std::log(M_PI) - std::lgamma(0.5 * d));
}

double sobolev_constant(int d) {
  if (d < 3) throw std::invalid_argument("sobolev_constant: d must be >= 3");
  // (1/4) d (d-2) |S^d|^{2/d}
  double area_sd = 2.0 * std::pow(M_PI, 0.5 * (d + 1)) / std::tgamma(0.5 * (d + 1));
  return 0.25 * d * (d - 2) * std::pow(area_sd, 2.0 / d);
}

SphereExponents sphere_exponents(int d, double p) {
  if (d < 1) throw std::invalid_argument("sphere_exponents: d must be >= 1");
  if (p < 1) throw std::invalid_argument("sphere_exponents: p must be >= 1");
  SphereExponents e;
  if (d == 1) {
    e.two_sharp = std::numeric_limits<double>::infinity();
    e.gamma_p = (p - 1.0) / 3.0;
  } else {
    e.two_sharp = (2.0 * d * d + 1.0) / double((d - 1) * (d - 1));
    double c = double(d - 1) / double(d + 2);
    e.gamma_p = c * c * (p - 1.0) * (e.two_sharp - p);
  }
  e.theta = d * (p - 1.0) / ((d + 2.0 - p * (d - 2.0)) * p);
  return e;
}

double sphere_delta(int d, double p, double m) {
  if (d < 1) throw std::invalid_argument("sphere_delta: d must be >= 1");
  if (p < 1 || p == 2.0)
    throw std::invalid_argument("sphere_delta: p must lie in [1,2) or above 2");
  if (d >= 3 && p > 2.0 * d / (d - 2) + 1e-12)
    throw std::invalid_argument("sphere_delta: p above the critical exponent");
  double den = 2.0 - p * (1.0 - m);
  if (std::abs(den) < 1e-14)
    throw std::invalid_argument("sphere_delta: 2 - p(1-m) vanishes, beta undefined");
  double beta = 2.0 / den;
  double kappa = beta * (p - 2.0) + 1.0;
  double s = kappa + beta - 1.0;
  double c = double(d - 1) / double(d + 2);
  return -(c * s) * (c * s) + kappa * (beta - 1.0) + double(d) / (d + 2) * s;
}

namespace {
double b_fs_threshold(int d, double a) {
  double ac = 0.5 * (d - 2);
  double t = ac - a;
  return d * t / (2.0 * std::sqrt(t * t + d - 1)) + a - ac;
}
}

RegimeVerdict felli_schneider(const CknParams& params, CknFamily family) {
  RegimeVerdict v;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (family == CknFamily::critical) {
    int d = params.d;
    double a = params.a, b = params.b;
    bool adm = d >= 1 && a < params.a_c();
    if (d >= 3)
      adm = adm && a <= b && b <= a + 1;
    else if (d == 2)
      adm = adm && a < b && b <= a + 1;
    else
      adm = adm && a + 0.5 < b && b <= a + 1;
    if (!adm) {
      v.region = Region::inadmissible;
      v.boundary_value = (a < params.a_c()) ? b_fs_threshold(d, a) : nan;
      v.margin = nan;
      return v;
    }
    v.boundary_value = b_fs_threshold(d, a);
    v.margin = b - v.boundary_value;
    v.region = v.margin >= 0 ? Region::symmetry : Region::symmetry_breaking;
    return v;
  }
  // subcritical family, parameters (beta, gamma)
  int d = params.d;
  double beta = params.beta, gamma = params.gamma;
  bool adm = d >= 2 && gamma < d && gamma - 2 < beta && beta < (d - 2.0) / d * gamma;
  if (!adm) {
    v.region = Region::inadmissible;
    v.boundary_value = nan;
    v.margin = nan;
    return v;
  }
  double disc = (gamma - d) * (gamma - d) - 4.0 * (d - 1);
  if (disc < 0) {
    // threshold is complex: the symmetry condition cannot hold anywhere at this gamma
    v.region = Region::symmetry_breaking;
    v.boundary_value = nan;
    v.margin = nan;
    return v;
  }
  v.boundary_value = d - 2 - std::sqrt(disc);
  v.margin = v.boundary_value - beta;
  v.region = v.margin >= 0 ? Region::symmetry : Region::symmetry_breaking;
  return v;
}

double alpha_fs(int d, double n) {
  if (d < 2) throw std::invalid_argument("alpha_fs: d must be >= 2");
  if (n <= 1) throw std::invalid_argument("alpha_fs: n must exceed 1");
  return std::sqrt((d - 1.0) / (n - 1.0));
}

double gns_optimal_constant(int d, double p) {
  if (d < 1) throw std::invalid_argument("gns_optimal_constant: d must be >= 1");
  if (p <= 1) throw std::invalid_argument("gns_optimal_constant: p must exceed 1");
  if (d >= 3 && p > double(d) / (d - 2) + 1e-12)
    throw std::invalid_argument("gns_optimal_constant: p above d/(d-2)");
  double theta = d * (p - 1.0) / ((d + 2.0 - p * (d - 2.0)) * p);
  double e = 1.0 / (p - 1.0);
  double sigma = sphere_area(d);
  auto rad = [d](const std::function<double(double)>& f) {
    return integrate_zero_inf(f);
  };
  double grad2 = sigma * rad([&](double r) {
    double q = 2.0 * e * r * std::pow(1.0 + r * r, -e - 1.0);
    return q * q * std::pow(r, d - 1);
  });
  double np1 = sigma * rad([&](double r) {
    return std::pow(1.0 + r * r, -e * (p + 1.0)) * std::pow(r, d - 1);
  });
  double n2p = sigma * rad([&](double r) {
    return std::pow(1.0 + r * r, -e * 2.0 * p) * std::pow(r, d - 1);
  });
  return std::pow(grad2, 0.5 * theta) * std::pow(np1, (1.0 - theta) / (p + 1.0)) /
         std::pow(n2p, 1.0 / (2.0 * p));
}

CknConstant ckn_symmetric_constant(const CknParams& params) {
  RegimeVerdict v = felli_schneider(params, CknFamily::critical);
  if (v.region == Region::inadmissible)
    throw std::invalid_argument("ckn_symmetric_constant: inadmissible parameters");
  if (v.region == Region::symmetry_breaking)
    throw std::invalid_argument(
        "ckn_symmetric_constant: symmetry-breaking region has no radial optimizer");
  int d = params.d;
  double a = params.a, b = params.b;
  double ac = params.a_c();
  double p = params.p();
  double s = (p - 2.0) * (ac - a);
  double sigma = sphere_area(d);
  double num = sigma * integrate_zero_inf([&](double r) {
    double g = std::pow(1.0 + std::pow(r, s), -2.0 / (p - 2.0));
    return std::pow(g, p) * std::pow(r, d - 1 - b * p);
  });
  double den = sigma * integrate_zero_inf([&](double r) {
    double gp = -2.0 * (ac - a) * std::pow(r, s - 1.0) *
                std::pow(1.0 + std::pow(r, s), -p / (p - 2.0));
    return gp * gp * std::pow(r, d - 1 - 2.0 * a);
  });
  CknConstant out;
  out.quadrature_value = std::pow(num, 2.0 / p) / den;
  // closed form as typeset (unbalanced parentheses upstream); quadrature is authoritative
  double ratio = (p - 2.0) * std::tgamma((3.0 * p - 2.0) / (2.0 * (p - 2.0))) /
                 (2.0 * std::sqrt(M_PI) * sigma * std::tgamma(p / (p - 2.0)));
  out.formula_value =
      2.0 / p * std::pow(ac - a, -(p + 2.0) / p) * std::pow(ratio, (p - 2.0) / p);
  out.formula_reliable = false;
  return out;
}

double renyi_growth_c0(int d, double m, double M) {
  if (d < 1) throw std::invalid_argument("renyi_growth_c0: d must be >= 1");
  if (M <= 0) throw std::invalid_argument("renyi_growth_c0: mass must be positive");
  if (m <= 0.5) throw std::invalid_argument("renyi_growth_c0: m must exceed 1/2");
  double m1 = (d - 1.0) / d;
  if (m < m1 - 1e-12 || m >= 1)
    throw std::invalid_argument("renyi_growth_c0: m must lie in [(d-1)/d, 1)");
  double p = 1.0 / (2.0 * m - 1.0);
  double cg = gns_optimal_constant(d, p);
  double e = (2.0 / d) * ((d + 2.0) * m - d) / ((1.0 - m) * (2.0 * m - 1.0));
  double f = ((d + 2.0) * m - d) / (d * (1.0 - m));
  return 4.0 * std::pow(1.0 - m, 3) / ((2.0 * m - 1.0) * (2.0 * m - 1.0)) * std::pow(cg, e) *
         std::pow(M, f);
}

double threshold_time(int d, double m, double A, double G, double eps,
                      const ThresholdConfig& cfg) {
  if (d < 1) throw std::invalid_argument("threshold_time: d must be >= 1");
  double m1 = (d - 1.0) / d, mc = (d - 2.0) / d;
  if (m <= m1 || m >= 1)
    throw std::invalid_argument("threshold_time: m must lie in ((d-1)/d, 1)");
  if (A < 0 || G < 0) throw std::invalid_argument("threshold_time: A and G must be >= 0");
  double eta = 2.0 * d * (m - m1);
  double hi = std::min(cfg.chi * eta, cfg.eps0);
  if (!(eps > 0 && eps < hi)) {
    std::ostringstream os;
    os << "threshold_time: eps must lie in (0, " << hi << ")";
    throw std::invalid_argument(os.str());
  }
  double alpha = d * (m - mc);
  return 1.0 / (2.0 * alpha) *
         std::log(1.0 + alpha * cfg.c_star * (1.0 + std::pow(A, 1.0 - m) + std::pow(G, 0.5 * alpha)) /
                            std::pow(eps, cfg.a_exp));
}

}
