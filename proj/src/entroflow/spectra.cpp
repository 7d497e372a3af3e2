#include "entroflow/spectra.hpp"

#include "entroflow/sphere.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace entroflow::spectra {

namespace {

// eigenvalue count below x for a symmetric tridiagonal matrix (Sturm sequence)
int sturm_count(const std::vector<double>& a, const std::vector<double>& b, double x) {
  int n = static_cast<int>(a.size());
  int cnt = 0;
  double d = a[0] - x;
  if (d < 0) ++cnt;
  for (int i = 1; i < n; ++i) {
    if (std::abs(d) < 1e-300) d = d < 0 ? -1e-300 : 1e-300;
    d = a[i] - x - b[i - 1] * b[i - 1] / d;
    if (d < 0) ++cnt;
  }
  return cnt;
}

}  // namespace

std::vector<double> tridiag_eigenvalues(const std::vector<double>& diag,
                                        const std::vector<double>& off, int k) {
  int n = static_cast<int>(diag.size());
  if (n < 1 || k < 1 || k > n) throw std::invalid_argument("tridiag_eigenvalues: bad sizes");
  if (static_cast<int>(off.size()) != n - 1)
    throw std::invalid_argument("tridiag_eigenvalues: off-diagonal size mismatch");
  double lo = diag[0], hi = diag[0];
  for (int i = 0; i < n; ++i) {
    double r = 0;
    if (i > 0) r += std::abs(off[i - 1]);
    if (i < n - 1) r += std::abs(off[i]);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  std::vector<double> out(k);
  for (int j = 1; j <= k; ++j) {
    double a = lo, b = hi;
    for (int it = 0; it < 120; ++it) {
      double mid = 0.5 * (a + b);
      if (sturm_count(diag, off, mid) >= j)
        b = mid;
      else
        a = mid;
    }
    out[j - 1] = 0.5 * (a + b);
  }
  return out;
}

namespace {

struct HpSector {
  std::vector<double> eig;  // raw Rayleigh eigenvalues below the deflation shelf
};

// one sector of the weighted eigenproblem on the mapped grid r = L s/(1-s)
HpSector hp_sector(int d, double m, int ell, int ncell,
                   const std::vector<std::vector<double>>& constraint_fns) {
  const double L = 4.0;
  const double q = 1.0 / (1.0 - m);
  const double ds = 1.0 / ncell;
  std::vector<double> rc(ncell), jac(ncell), mass(ncell);
  for (int i = 0; i < ncell; ++i) {
    double sc = (i + 0.5) * ds;
    rc[i] = L * sc / (1.0 - sc);
    jac[i] = ds * L / ((1.0 - sc) * (1.0 - sc));
    mass[i] = std::pow(1.0 + rc[i] * rc[i], -q * (2.0 - m)) * std::pow(rc[i], d - 1) * jac[i];
  }

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(ncell, ncell);
  for (int j = 1; j < ncell; ++j) {
    double sf = j * ds;
    double rf = L * sf / (1.0 - sf);
    double c = std::pow(1.0 + rf * rf, -q) * std::pow(rf, d - 1) / (rc[j] - rc[j - 1]);
    K(j - 1, j - 1) += c;
    K(j, j) += c;
    K(j - 1, j) -= c;
    K(j, j - 1) -= c;
  }
  double cent = static_cast<double>(ell) * (ell + d - 2);
  for (int i = 0; i < ncell; ++i) {
    if (cent != 0.0)
      K(i, i) += cent * std::pow(1.0 + rc[i] * rc[i], -q) * std::pow(rc[i], d - 3) * jac[i];
  }
  if (d == 1 && ell == 1) K(0, 0) += 1.0 / rc[0];  // odd sector vanishes at the origin

  Eigen::VectorXd sq(ncell);
  for (int i = 0; i < ncell; ++i) sq[i] = std::sqrt(mass[i]);
  Eigen::MatrixXd A(ncell, ncell);
  for (int i = 0; i < ncell; ++i)
    for (int j = 0; j < ncell; ++j) A(i, j) = K(i, j) / (sq[i] * sq[j]);
  A = 0.5 * (A + A.transpose()).eval();

  // deflate constrained directions far up the spectrum
  std::vector<Eigen::VectorXd> qs;
  for (const auto& cf : constraint_fns) {
    Eigen::VectorXd v(ncell);
    for (int i = 0; i < ncell; ++i) v[i] = sq[i] * cf[i];
    for (const auto& prev : qs) v -= prev.dot(v) * prev;
    double nrm = v.norm();
    if (nrm < 1e-12) continue;
    v /= nrm;
    qs.push_back(v);
  }
  const double BIG = 1e8;
  if (!qs.empty()) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(ncell, ncell);
    for (const auto& v : qs) P -= v * v.transpose();
    A = (P * A * P).eval();
    for (const auto& v : qs) A += BIG * v * v.transpose();
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  HpSector out;
  for (int i = 0; i < ncell; ++i) {
    double e = es.eigenvalues()[i];
    if (e < 1e6) out.eig.push_back(e);
  }
  return out;
}

std::vector<double> hp_merged(int d, double m, int level, int ncell) {
  std::vector<double> rc(ncell);
  const double L = 4.0, ds = 1.0 / ncell;
  for (int i = 0; i < ncell; ++i) {
    double sc = (i + 0.5) * ds;
    rc[i] = L * sc / (1.0 - sc);
  }
  std::vector<std::vector<double>> c0, c1;
  c0.push_back(std::vector<double>(ncell, 1.0));  // mass moment, always imposed
  if (level >= 2) {
    std::vector<double> r2(ncell);
    for (int i = 0; i < ncell; ++i) r2[i] = rc[i] * rc[i];
    c0.push_back(r2);
  }
  if (level >= 1) c1.push_back(rc);  // x-moment lives in the first angular sector

  HpSector s0 = hp_sector(d, m, 0, ncell, c0);
  HpSector s1 = hp_sector(d, m, 1, ncell, c1);
  std::vector<double> merged = s0.eig;
  merged.insert(merged.end(), s1.eig.begin(), s1.eig.end());
  std::sort(merged.begin(), merged.end());
  double scale = 2.0 * (1.0 - m);
  if (merged.size() > 8) merged.resize(8);
  for (auto& e : merged) e *= scale;
  return merged;
}

}  // namespace

EigenResult hardy_poincare_spectrum(int d, double m, int constraint_level, int mesh) {
  if (d < 1) throw std::invalid_argument("hardy_poincare_spectrum: need d >= 1");
  if (constraint_level < 0 || constraint_level > 2)
    throw std::invalid_argument("hardy_poincare_spectrum: constraint_level in {0,1,2}");
  if (mesh < 25) throw std::invalid_argument("hardy_poincare_spectrum: mesh too coarse");
  double m1 = (d - 1.0) / d;
  if (!(m < 1.0) || !(m > 0.0))
    throw std::invalid_argument("hardy_poincare_spectrum: need m in (0,1)");
  if (constraint_level <= 1) {
    if (!(m > m1))
      throw std::invalid_argument(
          "hardy_poincare_spectrum: levels 0-1 need m > (d-1)/d; use level 2 at the endpoint");
  } else if (m < m1 - 1e-12) {
    throw std::invalid_argument("hardy_poincare_spectrum: need m >= (d-1)/d");
  }

  std::vector<double> g(3);
  std::vector<double> finest;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> merged = hp_merged(d, m, constraint_level, mesh << k);
    if (merged.empty()) throw std::runtime_error("hardy_poincare_spectrum: empty spectrum");
    g[k] = merged.front();
    if (k == 2) finest = merged;
  }
  EigenResult res;
  res.eigenvalues = finest;
  res.mesh_size = mesh;
  res.richardson_estimate = g[2] + (g[2] - g[1]) / 3.0;
  res.constraints.push_back("zero mass moment against the stationary-profile weight");
  if (constraint_level >= 1) res.constraints.push_back("zero first moment (center fixed)");
  if (constraint_level >= 2) res.constraints.push_back("zero second moment (scale fixed)");
  return res;
}

namespace {

struct LineDomain {
  double x0 = 0;  // potential minimizer
  double half_width = 0;
  double phi_min = 0;
};

LineDomain build_line_domain(const std::function<double(double)>& phi, double rise) {
  LineDomain dom;
  double best = phi(0.0), bx = 0.0;
  for (int i = -3000; i <= 3000; ++i) {
    double x = i * 0.01;
    double v = phi(x);
    if (std::isfinite(v) && v < best) {
      best = v;
      bx = x;
    }
  }
  dom.x0 = bx;
  dom.phi_min = best;
  double L = 5.0;
  while (L < 1e6) {
    double a = phi(bx - L), b = phi(bx + L);
    if (std::isfinite(a) && std::isfinite(b) && a - best > rise && b - best > rise) break;
    L *= 1.5;
  }
  if (L >= 1e6)
    throw std::invalid_argument("potential is not confining on the scanned domain");
  dom.half_width = L;
  return dom;
}

double ou_gap_at(const std::function<double(double)>& phi, const LineDomain& dom, int n) {
  const double h = 2.0 * dom.half_width / (n + 1);
  const double fd = 1e-4;
  std::vector<double> diag(n), off(n - 1, -1.0 / (h * h));
  for (int i = 0; i < n; ++i) {
    double x = dom.x0 - dom.half_width + (i + 1) * h;
    double d1 = (phi(x + fd) - phi(x - fd)) / (2.0 * fd);
    double d2 = (phi(x + fd) - 2.0 * phi(x) + phi(x - fd)) / (fd * fd);
    diag[i] = 2.0 / (h * h) + 0.25 * d1 * d1 - 0.5 * d2;
  }
  std::vector<double> ev = tridiag_eigenvalues(diag, off, 2);
  return ev[1] - ev[0];
}

}  // namespace

double ou_kappa0(const std::function<double(double)>& phi, int mesh) {
  if (mesh < 50) throw std::invalid_argument("ou_kappa0: mesh too coarse");
  LineDomain dom = build_line_domain(phi, 50.0);
  double g1 = ou_gap_at(phi, dom, mesh);
  double g2 = ou_gap_at(phi, dom, 2 * mesh);
  return g2 + (g2 - g1) / 3.0;
}

namespace {

struct QuotientGrid {
  std::vector<double> x, mu, face;  // face[i] couples nodes i, i+1
  double h = 0;
};

QuotientGrid make_quotient_grid(const std::function<double(double)>& phi, int n) {
  LineDomain dom = build_line_domain(phi, 25.0);
  QuotientGrid g;
  g.h = 2.0 * dom.half_width / n;
  g.x.resize(n);
  g.mu.resize(n);
  g.face.resize(n - 1);
  double z = 0;
  for (int i = 0; i < n; ++i) {
    g.x[i] = dom.x0 - dom.half_width + (i + 0.5) * g.h;
    g.mu[i] = std::exp(-(phi(g.x[i]) - dom.phi_min)) * g.h;
    z += g.mu[i];
  }
  for (int i = 0; i + 1 < n; ++i) {
    double xf = 0.5 * (g.x[i] + g.x[i + 1]);
    g.face[i] = std::exp(-(phi(xf) - dom.phi_min)) / g.h / z;
  }
  for (auto& v : g.mu) v /= z;
  return g;
}

struct QuotientEval {
  double num = 0, den = 0, q = 0;
};

QuotientEval eval_quotient(const QuotientGrid& g, const std::vector<double>& f, double p) {
  QuotientEval out;
  int n = static_cast<int>(f.size());
  double dirichlet = 0;
  for (int i = 0; i + 1 < n; ++i) {
    double d = f[i + 1] - f[i];
    dirichlet += g.face[i] * d * d;
  }
  double cp = (p < 2.0) ? (2.0 - p) : 2.0;
  out.num = cp * dirichlet;
  double m2 = 0, mp = 0;
  for (int i = 0; i < n; ++i) {
    m2 += g.mu[i] * f[i] * f[i];
    mp += g.mu[i] * std::pow(f[i], p);
  }
  if (p < 2.0) {
    out.den = m2 - std::pow(mp, 2.0 / p);
  } else {
    double ent = 0;
    for (int i = 0; i < n; ++i)
      ent += g.mu[i] * f[i] * f[i] * std::log(f[i] * f[i] / m2);
    out.den = ent;
  }
  out.q = out.num / out.den;
  return out;
}

void quotient_grad(const QuotientGrid& g, const std::vector<double>& f, double p,
                   const QuotientEval& e, std::vector<double>& grad) {
  int n = static_cast<int>(f.size());
  grad.assign(n, 0.0);
  double cp = (p < 2.0) ? (2.0 - p) : 2.0;
  for (int i = 0; i + 1 < n; ++i) {
    double d = f[i + 1] - f[i];
    grad[i] -= 2.0 * cp * g.face[i] * d;
    grad[i + 1] += 2.0 * cp * g.face[i] * d;
  }
  std::vector<double> dden(n);
  if (p < 2.0) {
    double mp = 0;
    for (int i = 0; i < n; ++i) mp += g.mu[i] * std::pow(f[i], p);
    double c = std::pow(mp, (2.0 - p) / p);
    for (int i = 0; i < n; ++i)
      dden[i] = 2.0 * g.mu[i] * f[i] - 2.0 * c * g.mu[i] * std::pow(f[i], p - 1.0);
  } else {
    double m2 = 0;
    for (int i = 0; i < n; ++i) m2 += g.mu[i] * f[i] * f[i];
    for (int i = 0; i < n; ++i)
      dden[i] = 2.0 * g.mu[i] * f[i] * std::log(f[i] * f[i] / m2);
  }
  for (int i = 0; i < n; ++i) grad[i] = (grad[i] * e.den - e.num * dden[i]) / (e.den * e.den);
}

void project(const QuotientGrid& g, std::vector<double>& f) {
  double m2 = 0;
  for (size_t i = 0; i < f.size(); ++i) {
    f[i] = std::max(f[i], 1e-8);
    m2 += g.mu[i] * f[i] * f[i];
  }
  double s = 1.0 / std::sqrt(m2);
  for (auto& v : f) v *= s;
}

double minimize_from(const QuotientGrid& g, std::vector<double> f, double p, bool* converged,
                     std::vector<double>* keep) {
  project(g, f);
  QuotientEval e = eval_quotient(g, f, p);
  std::vector<double> grad, trial;
  *converged = false;
  int flat = 0;
  for (int it = 0; it < 5000; ++it) {
    quotient_grad(g, f, p, e, grad);
    double gn2 = 0;
    for (double v : grad) gn2 += v * v;
    double step = 1.0;
    bool moved = false;
    while (step > 1e-14) {
      trial = f;
      for (size_t i = 0; i < f.size(); ++i) trial[i] -= step * grad[i];
      project(g, trial);
      QuotientEval et = eval_quotient(g, trial, p);
      if (et.den > 1e-14 && et.q < e.q - 1e-4 * step * gn2) {
        double rel = std::abs(e.q - et.q) / std::max(1e-30, std::abs(et.q));
        f = trial;
        e = et;
        moved = true;
        flat = rel < 1e-10 ? flat + 1 : 0;
        break;
      }
      step *= 0.5;
    }
    if (!moved || flat >= 3) {
      *converged = true;
      break;
    }
  }
  if (keep) *keep = f;
  return e.q;
}

}  // namespace

double kappa1_minimize(const std::function<double(double)>& phi, double p, int mesh,
                       unsigned seed, std::vector<double>* minimizer,
                       std::vector<double>* minimizer_grid) {
  if (p < 1.0 || p > 2.0) throw std::invalid_argument("kappa1_minimize: p must lie in [1,2]");
  if (mesh < 50) throw std::invalid_argument("kappa1_minimize: mesh too coarse");
  QuotientGrid g = make_quotient_grid(phi, mesh);
  int n = mesh;

  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_f;
  bool any_converged = false;

  double xbar = 0;
  for (int i = 0; i < n; ++i) xbar += g.mu[i] * g.x[i];
  double spread = 0;
  for (int i = 0; i < n; ++i) spread += g.mu[i] * (g.x[i] - xbar) * (g.x[i] - xbar);
  spread = std::sqrt(std::max(spread, 1e-30));

  for (int start = 0; start < 9; ++start) {
    std::vector<double> f(n);
    if (start == 0) {
      for (int i = 0; i < n; ++i) f[i] = 1.0 + 0.1 * (g.x[i] - xbar) / spread;
    } else {
      std::mt19937 rng(seed + start);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (int i = 0; i < n; ++i) f[i] = 0.5 + u(rng);
    }
    bool conv = false;
    std::vector<double> fin;
    double q = minimize_from(g, std::move(f), p, &conv, &fin);
    any_converged = any_converged || conv;
    if (q < best) {
      best = q;
      best_f = fin;
    }
  }
  if (!any_converged)
    throw std::runtime_error("kappa1_minimize: no start converged; best value " +
                             std::to_string(best));
  if (minimizer) *minimizer = best_f;
  if (minimizer_grid) *minimizer_grid = g.x;
  return best;
}

EigenResult sphere_zonal_spectrum(int d, int n_modes, int mesh, bool antipodal) {
  if (n_modes < 5) throw std::invalid_argument("sphere_zonal_spectrum: need n_modes >= 5");
  if (mesh < 32) throw std::invalid_argument("sphere_zonal_spectrum: mesh too coarse");
  sphere::ZonalOperator op = sphere::make_zonal_operator(d, mesh);
  const int n = op.n;

  Eigen::MatrixXd A;
  if (!antipodal) {
    A.resize(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        A(i, j) = -static_cast<double>(op.lap[static_cast<size_t>(i) * n + j]);
  } else {
    int h = (n + 1) / 2;
    A = Eigen::MatrixXd::Zero(h, h);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < h; ++j) {
        int mj = n - 1 - j;
        double v = -static_cast<double>(op.lap[static_cast<size_t>(i) * n + j]);
        if (mj != j) v += -static_cast<double>(op.lap[static_cast<size_t>(i) * n + mj]);
        A(i, j) = v;
      }
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  std::vector<double> ev(es.eigenvalues().size());
  for (int i = 0; i < es.eigenvalues().size(); ++i) ev[i] = es.eigenvalues()[i].real();
  std::sort(ev.begin(), ev.end());
  if (static_cast<int>(ev.size()) > n_modes) ev.resize(n_modes);

  EigenResult res;
  res.eigenvalues = ev;
  res.mesh_size = mesh;
  if (antipodal) res.constraints.push_back("antipodal (even in z)");
  res.richardson_estimate = 0;
  for (double e : ev)
    if (e > 1e-6) {
      res.richardson_estimate = e;
      break;
    }
  return res;
}

}
