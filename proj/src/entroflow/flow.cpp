#include "entroflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace entroflow::flow {

namespace {

struct Mesh {
  std::vector<double> r, V;        // nodes, volumes
  std::vector<double> rf, sf, hf;  // interior faces: position, area, spacing
  int n = 0;
};

Mesh make_mesh(const RadialProfile& g) {
  Mesh m;
  m.n = static_cast<int>(g.r.size());
  m.r = g.r;
  m.V = g.w;
  double sigma = surface_factor(g.weight_dim);
  m.rf.resize(m.n - 1);
  m.sf.resize(m.n - 1);
  m.hf.resize(m.n - 1);
  for (int i = 0; i + 1 < m.n; ++i) {
    m.rf[i] = 0.5 * (g.r[i] + g.r[i + 1]);
    m.hf[i] = g.r[i + 1] - g.r[i];
    m.sf[i] = sigma * std::pow(m.rf[i], g.weight_dim - 1);
  }
  return m;
}

void thomas_solve(std::vector<double>& sub, std::vector<double>& diag,
                  std::vector<double>& sup, std::vector<double>& rhs,
                  std::vector<double>& x) {
  int n = static_cast<int>(diag.size());
  for (int i = 1; i < n; ++i) {
    double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  x.resize(n);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = (rhs[i] - sup[i] * x[i + 1]) / diag[i];
}

// divergence of the face fluxes for the nonlinear kinds
void divergence(const Mesh& mesh, const std::vector<double>& u, double m, bool rescaled,
                std::vector<double>& div) {
  int n = mesh.n;
  div.assign(n, 0.0);
  for (int f = 0; f < n - 1; ++f) {
    double flux;
    if (!rescaled) {
      flux = -mesh.sf[f] *
             (std::pow(u[f + 1], m) - std::pow(u[f], m)) / mesh.hf[f];
    } else {
      double delta = (std::pow(u[f + 1], m - 1.0) - std::pow(u[f], m - 1.0)) / mesh.hf[f];
      double vf = 0.5 * (u[f] + u[f + 1]);
      flux = mesh.sf[f] * vf * (delta - 2.0 * mesh.rf[f]);
    }
    div[f] += flux;
    div[f + 1] -= flux;
  }
}

// one implicit step of the nonlinear flow; returns the accepted iterate
void nonlinear_step(const Mesh& mesh, std::vector<double>& u, double dt, double theta,
                    double m, bool rescaled, const FlowConfig& cfg, long* clipped) {
  int n = mesh.n;
  std::vector<double> u0 = u, div0, divu, R(n);
  divergence(mesh, u0, m, rescaled, div0);

  std::vector<double> sub(n), diag(n), sup(n), rhs(n), delta;
  int extra = 1;  // one polish iteration after the tolerance is met
  for (int it = 0; it < cfg.newton_max_iter; ++it) {
    divergence(mesh, u, m, rescaled, divu);
    double umax = 0;
    for (int i = 0; i < n; ++i) {
      R[i] = mesh.V[i] * (u[i] - u0[i]) + dt * (theta * divu[i] + (1.0 - theta) * div0[i]);
      umax = std::max(umax, std::abs(u[i]));
    }

    std::fill(sub.begin(), sub.end(), 0.0);
    std::fill(sup.begin(), sup.end(), 0.0);
    for (int i = 0; i < n; ++i) diag[i] = mesh.V[i];
    for (int f = 0; f < n - 1; ++f) {
      double a, b;  // d flux / d u_f, d flux / d u_{f+1}
      if (!rescaled) {
        a = mesh.sf[f] * m * std::pow(u[f], m - 1.0) / mesh.hf[f];
        b = -mesh.sf[f] * m * std::pow(u[f + 1], m - 1.0) / mesh.hf[f];
      } else {
        double deltaf =
            (std::pow(u[f + 1], m - 1.0) - std::pow(u[f], m - 1.0)) / mesh.hf[f];
        double vf = 0.5 * (u[f] + u[f + 1]);
        double psi = deltaf - 2.0 * mesh.rf[f];
        a = mesh.sf[f] * (0.5 * psi + vf * (1.0 - m) * std::pow(u[f], m - 2.0) / mesh.hf[f]);
        b = mesh.sf[f] *
            (0.5 * psi - vf * (1.0 - m) * std::pow(u[f + 1], m - 2.0) / mesh.hf[f]);
      }
      double w = dt * theta;
      diag[f] += w * a;
      sup[f] += w * b;
      diag[f + 1] += w * (-b);
      sub[f + 1] += w * (-a);
    }
    for (int i = 0; i < n; ++i) rhs[i] = -R[i];
    thomas_solve(sub, diag, sup, rhs, delta);

    double s = 1.0, dmax = 0.0;
    for (int i = 0; i < n; ++i) {
      dmax = std::max(dmax, std::abs(delta[i]));
      if (delta[i] < 0 && u[i] + delta[i] < 0.05 * u[i])
        s = std::min(s, 0.95 * u[i] / (-delta[i]));
    }
    for (int i = 0; i < n; ++i) {
      u[i] += s * delta[i];
      if (u[i] < 1e-300) {
        u[i] = 1e-300;
        ++*clipped;
      }
    }
    // update-size convergence: the undamped step bounds the remaining error
    if (s == 1.0 && dmax <= cfg.newton_tol * (1.0 + umax)) {
      if (extra-- <= 0) return;
    } else if (it + 1 == cfg.newton_max_iter) {
      throw std::runtime_error("Newton divergence; last update " + std::to_string(dmax));
    }
  }
}

void check_cfg(const FlowConfig& cfg) {
  if (!(cfg.dt > 0) || !(cfg.t_end > 0))
    throw std::invalid_argument("flow: dt and t_end must be positive");
  if (cfg.record_every < 1) throw std::invalid_argument("flow: record_every must be >= 1");
  if (!(cfg.newton_tol > 0) || cfg.newton_tol >= 1e-6)
    throw std::invalid_argument("flow: newton_tol must lie in (0, 1e-6)");
  if (cfg.newton_max_iter < 3) throw std::invalid_argument("flow: newton_max_iter too small");
  if (cfg.scheme == Scheme::theta_method && (cfg.theta < 0 || cfg.theta > 1))
    throw std::invalid_argument("flow: theta must lie in [0,1]");
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double den = n * sxx - sx * sx;
  if (std::abs(den) < 1e-30) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / den;
}

enum class FitKind { exp_rate, power_exponent };

double fit_tail(const std::vector<functionals::DiagnosticsRecord>& recs,
                double functionals::DiagnosticsRecord::*field, FitKind kind) {
  size_t k0 = recs.size() - recs.size() / 3;
  std::vector<double> xs, ys;
  for (size_t k = k0; k < recs.size(); ++k) {
    double y = recs[k].*field;
    double t = recs[k].t;
    if (!(y > 0) || !std::isfinite(y)) continue;
    if (kind == FitKind::power_exponent && !(t > 0)) continue;
    xs.push_back(kind == FitKind::exp_rate ? t : std::log(t));
    ys.push_back(std::log(y));
  }
  if (xs.size() < 3) return std::numeric_limits<double>::quiet_NaN();
  double slope = ls_slope(xs, ys);
  return kind == FitKind::exp_rate ? -slope : slope;
}

}  // namespace

FlowResult run_free_fd(const RadialProfile& u0, const FlowConfig& cfg) {
  check_cfg(cfg);
  cfg.params.validate();
  if (std::abs(u0.weight_dim - cfg.params.n) > 1e-12)
    throw std::invalid_argument("run_free_fd: datum weight_dim must equal params.n");
  if (u0.values.size() != u0.r.size())
    throw std::invalid_argument("run_free_fd: datum has no values");
  double mass0 = 0;
  for (size_t i = 0; i < u0.r.size(); ++i) {
    if (!(u0.values[i] >= 0) || !std::isfinite(u0.values[i]))
      throw std::invalid_argument("run_free_fd: datum must be nonnegative and finite");
    mass0 += u0.w[i] * u0.values[i];
  }
  if (!(mass0 > 0) || !std::isfinite(mass0))
    throw std::invalid_argument("run_free_fd: datum mass must be positive and finite");

  Mesh mesh = make_mesh(u0);
  FlowResult out;
  out.kind = FlowKind::fd;
  out.params = cfg.params;
  out.grid = u0;
  out.grid.values.clear();
  out.record_dt = cfg.record_every * cfg.dt;

  std::vector<double> u = u0.values;
  double floor = 1e-12 * *std::max_element(u.begin(), u.end());
  for (auto& v : u)
    if (v < floor) v = floor;  // fast diffusion is instantly positive

  double theta = cfg.scheme == Scheme::implicit_euler ? 1.0 : cfg.theta;
  long nsteps = std::lround(cfg.t_end / cfg.dt);
  if (nsteps < 1) throw std::invalid_argument("run_free_fd: t_end shorter than dt");

  RadialProfile prof = u0;
  auto record = [&](double t) {
    prof.values = u;
    functionals::DiagnosticsRecord rec = functionals::free_diagnostics(prof, cfg.params);
    rec.t = t;
    out.records.push_back(rec);
    out.profiles.push_back(u);
  };
  record(0.0);
  for (long k = 1; k <= nsteps; ++k) {
    nonlinear_step(mesh, u, cfg.dt, theta, cfg.params.m, false, cfg, &out.clipped_count);
    if (k % cfg.record_every == 0 || k == nsteps) record(k * cfg.dt);
  }

  double drift = std::abs(out.records.back().mass - out.records.front().mass) /
                 out.records.front().mass;
  if (drift >= 1e-9) throw std::runtime_error("run_free_fd: mass drift exceeded 1e-9");
  out.fitted_rates.entropy_decay = fit_tail(out.records, &functionals::DiagnosticsRecord::E,
                                            FitKind::power_exponent);
  out.fitted_rates.fisher_decay = fit_tail(
      out.records, &functionals::DiagnosticsRecord::I_free, FitKind::power_exponent);
  return out;
}

FlowResult run_rescaled_fp(const RadialProfile& v0, const FlowConfig& cfg) {
  check_cfg(cfg);
  cfg.params.validate();
  if (std::abs(v0.weight_dim - cfg.params.n) > 1e-12)
    throw std::invalid_argument("run_rescaled_fp: datum weight_dim must equal params.n");
  if (v0.values.size() != v0.r.size())
    throw std::invalid_argument("run_rescaled_fp: datum has no values");

  RadialProfile statp = barenblatt(cfg.params, v0);
  double massB = statp.integrate_values();
  double mass0 = 0;
  for (size_t i = 0; i < v0.r.size(); ++i) {
    if (!(v0.values[i] > 0) || !std::isfinite(v0.values[i]))
      throw std::invalid_argument("run_rescaled_fp: datum must be positive and finite");
    mass0 += v0.w[i] * v0.values[i];
  }
  if (std::abs(mass0 - massB) > 1e-6 * massB)
    throw std::invalid_argument("run_rescaled_fp: datum mass must match the stationary mass");

  Mesh mesh = make_mesh(v0);
  FlowResult out;
  out.kind = FlowKind::rfd;
  out.params = cfg.params;
  out.grid = v0;
  out.grid.values.clear();
  out.record_dt = cfg.record_every * cfg.dt;

  std::vector<double> v = v0.values;
  double scale = massB / mass0;  // exact stationary mass keeps the F-functional clean
  for (auto& x : v) x *= scale;

  double theta = cfg.scheme == Scheme::implicit_euler ? 1.0 : cfg.theta;
  long nsteps = std::lround(cfg.t_end / cfg.dt);
  if (nsteps < 1) throw std::invalid_argument("run_rescaled_fp: t_end shorter than dt");

  RadialProfile prof = v0;
  auto record = [&](double t) {
    prof.values = v;
    functionals::RelativePair pair = functionals::relative_pair(prof, cfg.params);
    functionals::DiagnosticsRecord rec;
    rec.t = t;
    double mass = 0, em = 0, eps = 0;
    for (size_t i = 0; i < v.size(); ++i) {
      mass += v0.w[i] * v[i];
      em += v0.w[i] * std::pow(v[i], cfg.params.m);
      if (statp.values[i] > 1e-12)
        eps = std::max(eps, std::abs(v[i] / statp.values[i] - 1.0));
    }
    rec.mass = mass;
    rec.E = em;
    rec.F = pair.F;
    rec.I_rel = pair.I_rel;
    rec.Q = pair.Q;
    rec.sandwich_eps = eps;
    out.records.push_back(rec);
    out.profiles.push_back(v);
    if (std::isnan(out.empirical_T_star) && eps <= cfg.target_eps) out.empirical_T_star = t;
  };
  record(0.0);
  for (long k = 1; k <= nsteps; ++k) {
    nonlinear_step(mesh, v, cfg.dt, theta, cfg.params.m, true, cfg, &out.clipped_count);
    if (k % cfg.record_every == 0 || k == nsteps) record(k * cfg.dt);
  }

  double drift = std::abs(out.records.back().mass - out.records.front().mass) /
                 out.records.front().mass;
  if (drift >= 1e-9) throw std::runtime_error("run_rescaled_fp: mass drift exceeded 1e-9");
  out.fitted_rates.entropy_decay =
      fit_tail(out.records, &functionals::DiagnosticsRecord::F, FitKind::exp_rate);
  out.fitted_rates.fisher_decay =
      fit_tail(out.records, &functionals::DiagnosticsRecord::I_rel, FitKind::exp_rate);
  return out;
}

double verify_identity_F(const FlowResult& run) {
  if (run.kind != FlowKind::fd)
    throw std::invalid_argument("verify_identity_F: needs a free fast-diffusion run");
  size_t K = run.records.size();
  if (K < 3 || run.profiles.size() != K)
    throw std::invalid_argument("verify_identity_F: need at least three records with profiles");
  double n = run.grid.weight_dim;
  double m = run.params.m;
  double m1n = (n - 1.0) / n;

  double worst = 0;
  for (size_t k = 1; k + 1 < K; ++k) {
    double gm = run.records[k - 1].G, gp = run.records[k + 1].G;
    if (!(gm > 0) || !(gp > 0) || !std::isfinite(gm) || !std::isfinite(gp))
      throw std::invalid_argument("verify_identity_F: non-smooth records");
    double lhs = -0.5 * (std::log(gp) - std::log(gm)) /
                 (run.records[k + 1].t - run.records[k - 1].t);

    const std::vector<double>& u = run.profiles[k];
    RadialProfile up = run.grid;
    up.values = u;
    std::vector<double> P = pressure_of(up, m).values;
    std::vector<double> P1 = deriv1(run.grid.r, P);
    std::vector<double> P2 = deriv2(run.grid.r, P);
    double E = run.records[k].E, I = run.records[k].I_free;
    double t1 = 0, t2 = 0;
    for (size_t i = 0; i < u.size(); ++i) {
      double r = run.grid.r[i];
      double um = std::pow(u[i], m) * run.grid.w[i];
      double shear = r < 1e-14 ? 0.0 : P2[i] - P1[i] / r;
      double lap = r < 1e-14 ? n * P2[i] : P2[i] + (n - 1.0) * P1[i] / r;
      t1 += um * shear * shear;
      t2 += um * (lap + I / E) * (lap + I / E);
    }
    double rhs = (m1n * t1 + (m - m1n) * t2) / I;
    double mism = std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    worst = std::max(worst, mism);
  }
  return worst;
}

double itl_bound(double T, double eta) {
  double e4 = std::exp(-4.0 * T);
  return 4.0 + 4.0 * eta * e4 / (4.0 + eta - eta * e4);
}

bool initial_time_layer_check(const FlowResult& run, double T, double eta, bool* conclusive) {
  if (conclusive) *conclusive = false;
  if (!(T >= 0) || !(eta > 0))
    throw std::invalid_argument("initial_time_layer_check: need T >= 0 and eta > 0");
  const functionals::DiagnosticsRecord* at_T = nullptr;
  for (const auto& rec : run.records)
    if (rec.t <= T + 1e-12) at_T = &rec;
  if (!at_T || !(at_T->Q >= 4.0 + eta)) return true;  // precondition unmet: inconclusive
  if (conclusive) *conclusive = true;
  double bound = itl_bound(T, eta);
  for (const auto& rec : run.records) {
    if (rec.t > T + 1e-12) break;
    if (!(rec.Q >= bound - 1e-3)) return false;
  }
  return true;
}

FlowResult run_linear(LinearKind kind, const RadialProfile& w0, const FlowConfig& cfg,
                      const std::function<double(double)>& phi) {
  check_cfg(cfg);
  if (std::abs(w0.weight_dim - 1.0) > 1e-12) throw std::invalid_argument("run_linear: 1-D data required");
  if (w0.values.size() != w0.r.size())
    throw std::invalid_argument("run_linear: datum has no values");
  int n = static_cast<int>(w0.r.size());

  std::vector<double> mu(n), face(n - 1);
  if (kind == LinearKind::heat) {
    mu = w0.w;
    for (int i = 0; i + 1 < n; ++i) face[i] = 1.0 / (w0.r[i + 1] - w0.r[i]);
  } else {
    if (!phi) throw std::invalid_argument("run_linear: ou kind needs a potential");
    double pmin = phi(w0.r[0]);
    for (int i = 0; i < n; ++i) pmin = std::min(pmin, phi(w0.r[i]));
    double rise = std::min(phi(w0.r[0]), phi(w0.r[n - 1])) - pmin;
    if (!(rise >= 5.0))
      throw std::invalid_argument(
          "run_linear: potential must rise by >= 5 toward both ends of the grid");
    for (int i = 0; i < n; ++i) mu[i] = std::exp(-(phi(w0.r[i]) - pmin)) * w0.w[i];
    for (int i = 0; i + 1 < n; ++i) {
      double xf = 0.5 * (w0.r[i] + w0.r[i + 1]);
      face[i] = std::exp(-(phi(xf) - pmin)) / (w0.r[i + 1] - w0.r[i]);
    }
  }
  double Z = 0;
  for (double v : mu) Z += v;

  std::vector<double> g = w0.values;
  for (double v : g)
    if (!(v >= 0) || !std::isfinite(v))
      throw std::invalid_argument("run_linear: datum must be nonnegative and finite");

  double theta = cfg.scheme == Scheme::implicit_euler ? 1.0 : cfg.theta;
  long nsteps = std::lround(cfg.t_end / cfg.dt);
  if (nsteps < 1) throw std::invalid_argument("run_linear: t_end shorter than dt");

  FlowResult out;
  out.kind = kind == LinearKind::heat ? FlowKind::heat : FlowKind::ou;
  out.params = cfg.params;
  out.grid = w0;
  out.grid.values.clear();
  out.record_dt = cfg.record_every * cfg.dt;

  auto record = [&](double t) {
    functionals::DiagnosticsRecord rec;
    rec.t = t;
    double mass = 0;
    for (int i = 0; i < n; ++i) mass += mu[i] * g[i];
    mass /= Z;
    rec.mass = mass;
    if (kind == LinearKind::heat) {
      double e = 0;
      for (int i = 0; i < n; ++i) e += mu[i] * g[i] * g[i];
      rec.E = e;  // squared L2 norm; Nash decay target
    } else {
      double var = 0, ent = 0;
      for (int i = 0; i < n; ++i) {
        double d = g[i] - mass;
        var += mu[i] / Z * d * d;
        if (g[i] > 1e-300) ent += mu[i] / Z * g[i] * std::log(g[i] / mass);
      }
      rec.E = var;
      rec.F = ent;
    }
    out.records.push_back(rec);
    out.profiles.push_back(g);
  };
  record(0.0);

  std::vector<double> sub(n), diag(n), sup(n), rhs(n), gnew;
  for (long k = 1; k <= nsteps; ++k) {
    std::fill(sub.begin(), sub.end(), 0.0);
    std::fill(sup.begin(), sup.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      diag[i] = mu[i];
      rhs[i] = mu[i] * g[i];
    }
    for (int f = 0; f + 1 < n; ++f) {
      double c = face[f];
      double wimp = cfg.dt * theta * c, wexp = cfg.dt * (1.0 - theta) * c;
      diag[f] += wimp;
      sup[f] -= wimp;
      diag[f + 1] += wimp;
      sub[f + 1] -= wimp;
      double d0 = g[f + 1] - g[f];
      rhs[f] += wexp * d0;
      rhs[f + 1] -= wexp * d0;
    }
    thomas_solve(sub, diag, sup, rhs, gnew);
    g = gnew;
    if (k % cfg.record_every == 0 || k == nsteps) record(k * cfg.dt);
  }

  double drift = std::abs(out.records.back().mass - out.records.front().mass) /
                 std::max(std::abs(out.records.front().mass), 1e-300);
  if (drift >= 1e-9) throw std::runtime_error("run_linear: mass drift exceeded 1e-9");
  if (kind == LinearKind::heat) {
    out.fitted_rates.entropy_decay =
        fit_tail(out.records, &functionals::DiagnosticsRecord::E, FitKind::power_exponent);
  } else {
    out.fitted_rates.entropy_decay =
        fit_tail(out.records, &functionals::DiagnosticsRecord::F, FitKind::exp_rate);
    out.fitted_rates.fisher_decay =
        fit_tail(out.records, &functionals::DiagnosticsRecord::E, FitKind::exp_rate);
  }
  return out;
}

}
