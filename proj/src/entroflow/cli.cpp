#include "entroflow/cli.hpp"

#include "entroflow/constants.hpp"
#include "entroflow/core.hpp"
#include "entroflow/flow.hpp"
#include "entroflow/functionals.hpp"
#include "entroflow/io.hpp"
#include "entroflow/spectra.hpp"
#include "entroflow/sphere.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace entroflow::cli {

namespace {

using nlohmann::json;

constexpr double NOT_SET = std::numeric_limits<double>::quiet_NaN();

bool given(double x) { return !std::isnan(x); }

void emit_error(int code, const std::string& msg) {
  json e;
  e["error"] = msg;
  e["code"] = code;
  std::fprintf(stderr, "%s\n", e.dump().c_str());
}

void print_json(const json& j, const std::string& out_path) {
  std::string text = j.dump();
  std::printf("%s\n", text.c_str());
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    if (!os) throw std::runtime_error("cannot open output file: " + out_path);
    os << text << "\n";
  }
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open output file: " + path);
  os << j.dump(2) << "\n";
}

// Strict keyed overlay used by --config: every key must name a known
// parameter, and config values override flag values.
struct ParamMap {
  std::map<std::string, std::function<void(const json&)>> setters;

  static std::string canon(const std::string& k) {
    std::string s = k;
    for (char& c : s)
      if (c == '_') c = '-';
    return s;
  }

  void number(const std::string& key, double* target) {
    setters[key] = [key, target](const json& v) {
      if (!v.is_number()) throw std::invalid_argument("parameter '" + key + "' must be a number");
      *target = v.get<double>();
    };
  }
  void integer(const std::string& key, int* target) {
    setters[key] = [key, target](const json& v) {
      if (!v.is_number_integer())
        throw std::invalid_argument("parameter '" + key + "' must be an integer");
      *target = v.get<int>();
    };
  }
  void text(const std::string& key, std::string* target) {
    setters[key] = [key, target](const json& v) {
      if (!v.is_string()) throw std::invalid_argument("parameter '" + key + "' must be a string");
      *target = v.get<std::string>();
    };
  }
  void flag(const std::string& key, bool* target) {
    setters[key] = [key, target](const json& v) {
      if (!v.is_boolean()) throw std::invalid_argument("parameter '" + key + "' must be a boolean");
      *target = v.get<bool>();
    };
  }
  void numbers(const std::string& key, std::vector<double>* target) {
    setters[key] = [key, target](const json& v) {
      if (!v.is_array()) throw std::invalid_argument("parameter '" + key + "' must be an array");
      target->clear();
      for (const auto& x : v) {
        if (!x.is_number())
          throw std::invalid_argument("parameter '" + key + "' must hold numbers");
        target->push_back(x.get<double>());
      }
    };
  }

  void apply(const json& obj) const {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      auto found = setters.find(canon(it.key()));
      if (found == setters.end())
        throw std::invalid_argument("unknown parameter '" + it.key() + "' in config");
      found->second(it.value());
    }
  }
};

// Run n independent jobs; ENTROFLOW_THREADS caps the worker count.
// Results are collected by index, so output order never depends on timing.
void parallel_for(int n, const std::function<void(int)>& fn) {
  int workers = 1;
  if (const char* env = std::getenv("ENTROFLOW_THREADS")) workers = std::max(1, std::atoi(env));
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&, t] {
      try {
        int i;
        while ((i = next.fetch_add(1)) < n) fn(i);
      } catch (...) {
        errors[static_cast<size_t>(t)] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::function<double(double)> make_potential(const std::string& name, double center) {
  if (name == "harmonic") return [center](double x) { return 0.5 * (x - center) * (x - center); };
  if (name == "quadratic") return [center](double x) { return (x - center) * (x - center); };
  if (name == "double-well")
    return [center](double x) {
      double y = x - center;
      return 0.25 * y * y * y * y - 0.5 * y * y;
    };
  throw std::invalid_argument("unknown potential '" + name + "'");
}

RadialProfile profile_from_csv(const std::string& path, double weight_dim) {
  std::vector<double> r, v;
  io::read_profile(path, r, v);
  RadialProfile grid = grid_from_nodes(r, weight_dim);
  grid.values = v;
  return grid;
}

const char* region_name(constants::Region r) {
  switch (r) {
    case constants::Region::symmetry: return "symmetry";
    case constants::Region::symmetry_breaking: return "symmetry_breaking";
    default: return "inadmissible";
  }
}

double region_code(constants::Region r) {
  switch (r) {
    case constants::Region::symmetry: return 1.0;
    case constants::Region::symmetry_breaking: return -1.0;
    default: return 0.0;
  }
}

// ---------------------------------------------------------------- constants

struct ConstantsOpts {
  int d = 0;
  double m = NOT_SET, p = NOT_SET;
  double a = NOT_SET, b = NOT_SET, beta = NOT_SET, gamma = NOT_SET;
  double A = NOT_SET, G = NOT_SET, eps = NOT_SET;
  double mass = 1.0;
  constants::ThresholdConfig thresh;
  std::string out;
};

void run_constants(const ConstantsOpts& o) {
  if (o.d < 1) throw std::invalid_argument("constants requires --d >= 1");
  if (given(o.p) && o.p <= 1) throw std::invalid_argument("--p must exceed 1");
  if (given(o.m) && (o.m <= 0 || o.m >= 1)) throw std::invalid_argument("--m must lie in (0,1)");
  json out;
  out["d"] = o.d;
  out["sphere_area"] = constants::sphere_area(o.d);
  if (o.d >= 3) out["S_d"] = constants::sobolev_constant(o.d);
  {
    ProblemParams base;
    base.d = o.d;
    out["m1"] = base.m1();
    out["mc"] = base.mc();
  }
  if (given(o.p)) {
    constants::SphereExponents e = constants::sphere_exponents(o.d, o.p);
    out["two_sharp"] = e.two_sharp;
    out["gamma_p"] = e.gamma_p;
    out["theta"] = e.theta;
    try {
      out["C_GNS"] = constants::gns_optimal_constant(o.d, o.p);
    } catch (const std::invalid_argument&) {
      // p outside the interpolation window for this d; no such constant
    }
  }
  if (given(o.p) && given(o.m)) out["delta"] = constants::sphere_delta(o.d, o.p, o.m);
  if (given(o.m)) {
    ProblemParams fd = ProblemParams::fast_diffusion(o.d, o.m, o.mass);
    out["alpha"] = fd.alpha();
    try {
      out["C0"] = constants::renyi_growth_c0(o.d, o.m, o.mass);
    } catch (const std::invalid_argument&) {
      // growth constant needs m above the critical exponent
    }
  }
  if (given(o.m) && given(o.A) && given(o.G) && given(o.eps))
    out["T_star"] = constants::threshold_time(o.d, o.m, o.A, o.G, o.eps, o.thresh);
  if (given(o.a) && given(o.b)) {
    CknParams ck;
    ck.d = o.d;
    ck.a = o.a;
    ck.b = o.b;
    constants::RegimeVerdict v = constants::felli_schneider(ck, constants::CknFamily::critical);
    out["ckn_region"] = region_name(v.region);
    out["b_FS"] = v.boundary_value;
    out["ckn_margin"] = v.margin;
    if (v.region == constants::Region::symmetry) {
      constants::CknConstant c = constants::ckn_symmetric_constant(ck);
      out["C_ab"] = c.quadrature_value;
      out["C_ab_formula"] = c.formula_value;
      out["C_ab_formula_reliable"] = c.formula_reliable;
    }
  }
  if (given(o.beta) && given(o.gamma)) {
    CknParams ck;
    ck.d = o.d;
    ck.beta = o.beta;
    ck.gamma = o.gamma;
    constants::RegimeVerdict v = constants::felli_schneider(ck, constants::CknFamily::subcritical);
    out["ckn_region_subcritical"] = region_name(v.region);
    out["beta_FS"] = v.boundary_value;
    out["ckn_margin_subcritical"] = v.margin;
  }
  print_json(out, o.out);
}

// ------------------------------------------------------------------ profile

struct ProfileOpts {
  std::string family = "barenblatt";
  int d = 3;
  double m = 0.8, p = NOT_SET;
  double a = NOT_SET, b = NOT_SET;
  double mass = NOT_SET;
  int nodes = 512;
  double rmax = 20.0, stretch = 3.0;
  std::string out;
};

void run_profile(const ProfileOpts& o) {
  if (o.out.empty()) throw std::invalid_argument("profile requires --out");
  RadialProfile prof;
  if (o.family == "barenblatt") {
    ProblemParams params = ProblemParams::fast_diffusion(o.d, o.m, given(o.mass) ? o.mass : 1.0);
    RadialProfile grid = make_grid(o.nodes, o.rmax, o.stretch, params.n);
    prof = barenblatt(params, grid, given(o.mass));
  } else if (o.family == "sobolev") {
    ProblemParams params;
    params.d = o.d;
    RadialProfile grid = make_grid(o.nodes, o.rmax, o.stretch, o.d);
    prof = aubin_talenti(params, grid, OptimizerFamily::sobolev);
  } else if (o.family == "gns") {
    if (!given(o.p)) throw std::invalid_argument("profile --family gns requires --p");
    ProblemParams params = ProblemParams::from_p(o.d, o.p);
    RadialProfile grid = make_grid(o.nodes, o.rmax, o.stretch, o.d);
    prof = aubin_talenti(params, grid, OptimizerFamily::gns);
  } else if (o.family == "ckn") {
    if (!given(o.a) || !given(o.b)) throw std::invalid_argument("profile --family ckn requires --a and --b");
    CknParams ck;
    ck.d = o.d;
    ck.a = o.a;
    ck.b = o.b;
    ProblemParams params;
    params.d = o.d;
    RadialProfile grid = make_grid(o.nodes, o.rmax, o.stretch, o.d);
    prof = aubin_talenti(params, grid, OptimizerFamily::ckn, &ck);
  } else {
    throw std::invalid_argument("unknown profile family '" + o.family + "'");
  }
  io::write_profile(o.out, prof.r, prof.values);
}

// --------------------------------------------------------------------- flow

struct FlowOpts {
  std::string kind = "fd";
  int d = 3;
  double m = 0.8;
  double n = NOT_SET;
  double dt = 1e-3, t_end = 1.0;
  int record_every = 10;
  std::string scheme = "implicit";
  double theta = 0.5;
  double target_eps = 0.05;
  std::string potential = "harmonic";
  std::string datum, out;
};

void run_flow(const FlowOpts& o) {
  if (o.out.empty()) throw std::invalid_argument("flow requires --out");
  flow::FlowConfig cfg;
  cfg.dt = o.dt;
  cfg.t_end = o.t_end;
  cfg.record_every = o.record_every;
  cfg.theta = o.theta;
  cfg.target_eps = o.target_eps;
  if (o.scheme == "implicit")
    cfg.scheme = flow::Scheme::implicit_euler;
  else if (o.scheme == "theta")
    cfg.scheme = flow::Scheme::theta_method;
  else
    throw std::invalid_argument("unknown scheme '" + o.scheme + "' (implicit|theta)");

  flow::FlowResult run;
  if (o.kind == "fd" || o.kind == "rfd") {
    double n_dim = given(o.n) ? o.n : static_cast<double>(o.d);
    cfg.params = ProblemParams::fast_diffusion(o.d, o.m);
    cfg.params.n = n_dim;
    cfg.params.validate();
    RadialProfile u0;
    if (!o.datum.empty()) {
      u0 = profile_from_csv(o.datum, n_dim);
    } else {
      RadialProfile grid = make_grid(600, 30.0, 3.0, n_dim);
      if (o.kind == "fd") {
        u0 = barenblatt(cfg.params, grid);
      } else {
        // dilated stationary profile, rescaled to the attractor mass
        RadialProfile station = barenblatt(cfg.params, grid);
        double mass_b = station.integrate_values();
        u0 = grid;
        u0.values.resize(grid.size());
        for (size_t i = 0; i < grid.size(); ++i) {
          double r = grid.r[i] / 1.2;
          u0.values[i] = std::pow(1.0 + r * r, 1.0 / (o.m - 1.0));
        }
        double mass_0 = u0.integrate_values();
        for (double& v : u0.values) v *= mass_b / mass_0;
      }
    }
    run = (o.kind == "fd") ? flow::run_free_fd(u0, cfg) : flow::run_rescaled_fp(u0, cfg);
  } else if (o.kind == "heat" || o.kind == "ou") {
    RadialProfile w0;
    std::function<double(double)> phi;
    if (o.kind == "heat") {
      if (!o.datum.empty()) {
        w0 = profile_from_csv(o.datum, 1.0);
      } else {
        w0 = make_grid(2001, 400.0, 1.0, 1.0);
        w0.values.resize(w0.size());
        for (size_t i = 0; i < w0.size(); ++i) w0.values[i] = std::exp(-0.25 * w0.r[i] * w0.r[i]);
      }
      run = flow::run_linear(flow::LinearKind::heat, w0, cfg);
    } else {
      if (!o.datum.empty()) {
        w0 = profile_from_csv(o.datum, 1.0);
      } else {
        w0 = make_grid(801, 20.0, 1.0, 1.0);
        w0.values.resize(w0.size());
        for (size_t i = 0; i < w0.size(); ++i) {
          double y = w0.r[i] - 11.0;
          w0.values[i] = std::exp(-0.5 * y * y) + 0.05;
        }
      }
      phi = make_potential(o.potential, 0.5 * w0.r_max());
      run = flow::run_linear(flow::LinearKind::ou, w0, cfg, phi);
    }
  } else {
    throw std::invalid_argument("unknown flow kind '" + o.kind + "' (fd|rfd|heat|ou)");
  }

  io::Table t;
  t.columns = {"t", "mass", "E", "F", "I_free", "I_rel", "Q", "G", "sandwich_eps"};
  for (const auto& rec : run.records)
    t.rows.push_back({rec.t, rec.mass, rec.E, rec.F, rec.I_free, rec.I_rel, rec.Q, rec.G,
                      rec.sandwich_eps});
  io::write_csv(o.out, t);

  json summary;
  summary["kind"] = o.kind;
  summary["records"] = run.records.size();
  summary["clipped"] = run.clipped_count;
  summary["empirical_T_star"] = run.empirical_T_star;
  summary["entropy_rate"] = run.fitted_rates.entropy_decay;
  summary["fisher_rate"] = run.fitted_rates.fisher_decay;
  std::printf("%s\n", summary.dump().c_str());
}

// ----------------------------------------------------------------- spectrum

struct SpectrumOpts {
  std::string op = "hp";
  int d = 3;
  double m = 0.8;
  int level = 0;
  int mesh = 0;  // 0 = per-operator default
  int n_modes = 8;
  bool antipodal = false;
  std::string potential = "harmonic";
  std::string out;
};

void run_spectrum(const SpectrumOpts& o) {
  json out;
  if (o.op == "hp") {
    int mesh = o.mesh > 0 ? o.mesh : 200;
    spectra::EigenResult res = spectra::hardy_poincare_spectrum(o.d, o.m, o.level, mesh);
    out["eigenvalues"] = res.eigenvalues;
    out["gap"] = res.richardson_estimate;
    out["constraints"] = res.constraints;
  } else if (o.op == "sphere") {
    int mesh = o.mesh > 0 ? o.mesh : 128;
    spectra::EigenResult res = spectra::sphere_zonal_spectrum(o.d, o.n_modes, mesh, o.antipodal);
    out["eigenvalues"] = res.eigenvalues;
    out["gap"] = res.richardson_estimate;
    out["constraints"] = res.constraints;
  } else if (o.op == "ou") {
    int mesh = o.mesh > 0 ? o.mesh : 400;
    std::function<double(double)> phi = make_potential(o.potential, 0.0);
    double kappa0 = spectra::ou_kappa0(phi, mesh);
    out["eigenvalues"] = std::vector<double>{0.0, kappa0};
    out["gap"] = kappa0;
    out["constraints"] = std::vector<std::string>{};
  } else {
    throw std::invalid_argument("unknown operator '" + o.op + "' (hp|ou|sphere)");
  }
  print_json(out, o.out);
}

// ------------------------------------------------------------------- branch

struct BranchOpts {
  int d = 3;
  double p = NOT_SET;
  int ell = 1;
  int direction = 1;
  int mesh = 128;
  int max_points = 1200;
  std::string out;
};

io::Table branch_table(const sphere::Branch& br) {
  io::Table t;
  t.columns = {"arclength", "lambda", "mu", "signature"};
  for (const auto& pt : br.points)
    t.rows.push_back({pt.arclength, pt.lambda, pt.mu,
                      static_cast<double>(pt.jacobian_signature)});
  return t;
}

void run_branch(const BranchOpts& o) {
  if (!given(o.p)) throw std::invalid_argument("branch requires --p");
  if (o.direction != 1 && o.direction != -1)
    throw std::invalid_argument("--direction must be +1 or -1");
  sphere::StepConfig cfg;
  cfg.mesh = o.mesh;
  cfg.max_points = o.max_points;
  sphere::Branch br = sphere::continue_branch(o.ell, o.d, o.p, o.direction, cfg);
  io::Table t = branch_table(br);
  if (!o.out.empty())
    io::write_csv(o.out, t);
  else
    std::printf("%s", io::to_csv(t).c_str());
  json summary;
  summary["points"] = br.points.size();
  summary["ell"] = br.ell;
  summary["truncated"] = br.truncated;
  summary["truncation_reason"] = br.truncation_reason;
  if (!br.points.empty()) {
    summary["lambda_first"] = br.points.front().lambda;
    summary["lambda_last"] = br.points.back().lambda;
  }
  if (!o.out.empty()) std::printf("%s\n", summary.dump().c_str());
}

// -------------------------------------------------------------------- kappa

struct KappaOpts {
  int d = 3;
  std::vector<double> p;
  int mesh = 384;  // quotient descent is O(mesh^2), so a fine default is cheap
  std::string out;
};

void run_kappa(const KappaOpts& o) {
  if (o.p.empty()) throw std::invalid_argument("kappa requires at least one --p");
  sphere::StepConfig cfg;
  cfg.mesh = o.mesh;
  std::vector<double> values(o.p.size());
  parallel_for(static_cast<int>(o.p.size()), [&](int i) {
    values[static_cast<size_t>(i)] = sphere::kappa_p(o.d, o.p[static_cast<size_t>(i)], cfg);
  });
  io::Table t;
  t.columns = {"p", "kappa_p"};
  for (size_t i = 0; i < o.p.size(); ++i) t.rows.push_back({o.p[i], values[i]});
  if (!o.out.empty()) {
    io::write_csv(o.out, t);
    json summary;
    summary["p"] = o.p;
    summary["kappa_p"] = values;
    std::printf("%s\n", summary.dump().c_str());
  } else {
    std::printf("%s", io::to_csv(t).c_str());
  }
}

// ------------------------------------------------------------------ ckn-map

struct CknMapOpts {
  int d = 3;
  double a_min = -1.0, a_max = 0.45;
  double b_min = -0.5, b_max = 1.0;
  int na = 16, nb = 16;
  std::string out;
};

void run_ckn_map(const CknMapOpts& o) {
  if (o.out.empty()) throw std::invalid_argument("ckn-map requires --out");
  if (o.na < 2 || o.nb < 2) throw std::invalid_argument("--na and --nb must be at least 2");
  const int total = o.na * o.nb;
  std::vector<std::vector<double>> rows(static_cast<size_t>(total));
  parallel_for(total, [&](int idx) {
    int i = idx / o.nb, j = idx % o.nb;
    double a = o.a_min + (o.a_max - o.a_min) * i / (o.na - 1);
    double b = o.b_min + (o.b_max - o.b_min) * j / (o.nb - 1);
    CknParams ck;
    ck.d = o.d;
    ck.a = a;
    ck.b = b;
    constants::RegimeVerdict v = constants::felli_schneider(ck, constants::CknFamily::critical);
    rows[static_cast<size_t>(idx)] = {a, b, region_code(v.region), v.boundary_value, v.margin};
  });
  io::Table t;
  t.columns = {"a", "b", "region", "b_fs", "margin"};
  t.rows = std::move(rows);
  io::write_csv(o.out, t);
}

// -------------------------------------------------------------------- check

struct CheckOpts {
  std::string functional = "free";
  std::string profile;
  int d = 3;
  double m = 0.8;
  double p = NOT_SET;
  double n = NOT_SET;
  double mass = 1.0;
  std::string out;
};

void run_check(const CheckOpts& o) {
  if (o.profile.empty()) throw std::invalid_argument("check requires --profile");
  json out;
  if (o.functional == "free" || o.functional == "relative") {
    double n_dim = given(o.n) ? o.n : static_cast<double>(o.d);
    ProblemParams params = ProblemParams::fast_diffusion(o.d, o.m, o.mass);
    params.n = n_dim;
    params.validate();
    RadialProfile u = profile_from_csv(o.profile, n_dim);
    if (o.functional == "free") {
      functionals::DiagnosticsRecord rec = functionals::free_diagnostics(u, params);
      out["mass"] = rec.mass;
      out["E"] = rec.E;
      out["I_free"] = rec.I_free;
      out["G"] = rec.G;
    } else {
      functionals::RelativePair pair = functionals::relative_pair(u, params);
      out["F"] = pair.F;
      out["I_rel"] = pair.I_rel;
      out["Q"] = pair.Q;
    }
  } else if (o.functional == "gns-stability") {
    if (!given(o.p)) throw std::invalid_argument("check --functional gns-stability requires --p");
    ProblemParams params = ProblemParams::from_p(o.d, o.p);
    RadialProfile f = profile_from_csv(o.profile, o.d);
    functionals::StabilityReport rep = functionals::gns_stability(f, params);
    out["deficit"] = rep.deficit;
    out["rel_entropy"] = rep.rel_entropy;
    out["fisher_distance"] = rep.fisher_distance;
    out["pck_lower"] = rep.pck_lower;
    out["best_match"] = {{"sigma", rep.best_match.sigma},
                         {"amplitude", rep.best_match.amplitude},
                         {"mass", rep.best_match.mass},
                         {"second_moment", rep.best_match.second_moment}};
  } else if (o.functional == "heisenberg") {
    if (!given(o.p)) throw std::invalid_argument("check --functional heisenberg requires --p");
    RadialProfile f = profile_from_csv(o.profile, o.d);
    functionals::HeisenbergPair pair = functionals::heisenberg_check(f, o.p);
    out["lhs"] = pair.lhs;
    out["rhs"] = pair.rhs;
    out["satisfied"] = pair.lhs <= pair.rhs * (1.0 + 1e-12);
  } else {
    throw std::invalid_argument("unknown functional '" + o.functional +
                                "' (free|relative|gns-stability|heisenberg)");
  }
  print_json(out, o.out);
}

// ---------------------------------------------------------------- reproduce

struct ReproduceOpts {
  std::string figure;
  std::string out_dir = ".";
  int mesh = 96;
};

void run_reproduce(const ReproduceOpts& o) {
  namespace fs = std::filesystem;
  fs::create_directories(o.out_dir);
  auto path = [&](const std::string& name) { return (fs::path(o.out_dir) / name).string(); };
  sphere::StepConfig cfg;
  cfg.mesh = o.mesh;

  if (o.figure == "fig1") {
    double lam_star = sphere::detect_bifurcation(3, 3.0, 1, 64);
    sphere::Branch br = sphere::continue_branch(1, 3, 3.0, 1, cfg);
    io::write_csv(path("branch_d3_p3.csv"), branch_table(br));
    std::vector<double> grid;
    for (double lam = 0.5; lam <= 6.0 + 1e-9; lam += 0.1) grid.push_back(lam);
    std::vector<sphere::MuCurvePoint> mu = sphere::mu_of_lambda(3, 3.0, grid, cfg);
    io::Table t;
    t.columns = {"lambda", "mu", "certified"};
    for (const auto& pt : mu) t.rows.push_back({pt.lambda, pt.mu, pt.certified ? 1.0 : 0.0});
    io::write_csv(path("mu_lambda_d3_p3.csv"), t);
    json summary;
    summary["d"] = 3;
    summary["p"] = 3.0;
    summary["bifurcation_lambda"] = lam_star;
    write_json_file(summary, path("fig1_summary.json"));
    std::printf("%s\n", summary.dump().c_str());
  } else if (o.figure == "fig2") {
    const double p = 10.0 / 3.0;
    double lam1 = sphere::detect_bifurcation(5, p, 1, 64);
    double lam2 = sphere::detect_bifurcation(5, p, 2, 64);
    sphere::StepConfig c2 = cfg;
    c2.mesh = std::max(o.mesh, 128);
    sphere::Branch up = sphere::continue_branch(2, 5, p, 1, c2);
    sphere::Branch down = sphere::continue_branch(2, 5, p, -1, c2);
    io::write_csv(path("branch_d5_up.csv"), branch_table(up));
    io::write_csv(path("branch_d5_down.csv"), branch_table(down));
    json summary;
    summary["d"] = 5;
    summary["p"] = p;
    summary["bifurcation_points"] = std::vector<double>{lam1, lam2};
    write_json_file(summary, path("fig2_summary.json"));
    std::printf("%s\n", summary.dump().c_str());
  } else if (o.figure == "fig3") {
    const double p_star = 10.0 / 3.0;
    std::vector<double> ps = {3.0, 3.2, p_star};
    sphere::StepConfig c3 = cfg;
    c3.mesh = std::max(o.mesh, 128);
    std::vector<double> values(ps.size());
    parallel_for(static_cast<int>(ps.size()),
                 [&](int i) { values[static_cast<size_t>(i)] = sphere::kappa_p(5, ps[static_cast<size_t>(i)], c3); });
    io::Table t;
    t.columns = {"p", "kappa_p"};
    for (size_t i = 0; i < ps.size(); ++i) t.rows.push_back({ps[i], values[i]});
    io::write_csv(path("kappa_d5.csv"), t);
    json summary;
    summary["d"] = 5;
    summary["p_grid"] = ps;
    summary["kappa_p"] = values;
    summary["kappa_10_3"] = values.back();
    write_json_file(summary, path("fig3_summary.json"));
    std::printf("%s\n", summary.dump().c_str());
  } else {
    throw std::invalid_argument("unknown figure '" + o.figure + "' (fig1|fig2|fig3)");
  }
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"entroflow: entropy methods for nonlinear diffusion, numerically"};
  app.fallthrough();
  app.require_subcommand(1);

  int seed = 0;
  std::string config_path;
  app.add_option("--seed", seed, "seed for any randomized multi-start");
  app.add_option("--config", config_path, "JSON run config; overrides flags");

  ConstantsOpts co;
  ProfileOpts po;
  FlowOpts fo;
  SpectrumOpts so;
  BranchOpts bo;
  KappaOpts ko;
  CknMapOpts mo;
  CheckOpts ho;
  ReproduceOpts ro;

  CLI::App* c_constants = app.add_subcommand("constants", "closed-form and quadrature constants");
  c_constants->add_option("--d", co.d, "ambient dimension");
  c_constants->add_option("--m", co.m, "diffusion exponent");
  c_constants->add_option("--p", co.p, "interpolation exponent");
  c_constants->add_option("--a", co.a, "gradient weight exponent");
  c_constants->add_option("--b", co.b, "norm weight exponent");
  c_constants->add_option("--beta", co.beta, "subcritical norm weight");
  c_constants->add_option("--gamma", co.gamma, "subcritical measure weight");
  c_constants->add_option("--A", co.A, "datum amplitude bound");
  c_constants->add_option("--G", co.G, "datum tail-growth bound");
  c_constants->add_option("--eps", co.eps, "target sandwich accuracy");
  c_constants->add_option("--mass", co.mass, "mass normalization");
  c_constants->add_option("--c-star", co.thresh.c_star, "threshold-time prefactor");
  c_constants->add_option("--a-exp", co.thresh.a_exp, "threshold-time amplitude exponent");
  c_constants->add_option("--eps0", co.thresh.eps0, "threshold-time accuracy ceiling");
  c_constants->add_option("--chi", co.thresh.chi, "threshold-time interpolation weight");
  c_constants->add_option("--out", co.out, "also write the JSON here");

  CLI::App* c_profile = app.add_subcommand("profile", "closed-form optimizer profiles");
  c_profile->add_option("--family", po.family, "barenblatt|sobolev|gns|ckn");
  c_profile->add_option("--d", po.d, "ambient dimension");
  c_profile->add_option("--m", po.m, "diffusion exponent");
  c_profile->add_option("--p", po.p, "interpolation exponent");
  c_profile->add_option("--a", po.a, "gradient weight exponent");
  c_profile->add_option("--b", po.b, "norm weight exponent");
  c_profile->add_option("--mass", po.mass, "normalize to this mass");
  c_profile->add_option("--nodes", po.nodes, "grid nodes");
  c_profile->add_option("--rmax", po.rmax, "grid radius");
  c_profile->add_option("--stretch", po.stretch, "grid stretching exponent");
  c_profile->add_option("--out", po.out, "output CSV (r,value)");

  CLI::App* c_flow = app.add_subcommand("flow", "diffusion flows with entropy diagnostics");
  c_flow->add_option("--kind", fo.kind, "fd|rfd|heat|ou");
  c_flow->add_option("--d", fo.d, "ambient dimension");
  c_flow->add_option("--m", fo.m, "diffusion exponent");
  c_flow->add_option("--n", fo.n, "weight dimension (defaults to d)");
  c_flow->add_option("--dt", fo.dt, "time step");
  c_flow->add_option("--t-end", fo.t_end, "final time");
  c_flow->add_option("--record-every", fo.record_every, "steps between records");
  c_flow->add_option("--scheme", fo.scheme, "implicit|theta");
  c_flow->add_option("--theta", fo.theta, "theta for the theta scheme");
  c_flow->add_option("--target-eps", fo.target_eps, "sandwich threshold for T_star");
  c_flow->add_option("--potential", fo.potential, "harmonic|quadratic|double-well (ou)");
  c_flow->add_option("--datum", fo.datum, "initial datum CSV (r,value)");
  c_flow->add_option("--out", fo.out, "diagnostics CSV");

  CLI::App* c_spectrum = app.add_subcommand("spectrum", "linearization spectra");
  c_spectrum->add_option("--operator", so.op, "hp|ou|sphere");
  c_spectrum->add_option("--d", so.d, "ambient dimension");
  c_spectrum->add_option("--m", so.m, "diffusion exponent (hp)");
  c_spectrum->add_option("--level", so.level, "moment-constraint level (hp)");
  c_spectrum->add_option("--mesh", so.mesh, "mesh size (0 = default)");
  c_spectrum->add_option("--n-modes", so.n_modes, "modes to report (sphere)");
  c_spectrum->add_flag("--antipodal", so.antipodal, "restrict to antipodally symmetric modes");
  c_spectrum->add_option("--potential", so.potential, "harmonic|quadratic|double-well (ou)");
  c_spectrum->add_option("--out", so.out, "also write the JSON here");

  CLI::App* c_branch = app.add_subcommand("branch", "non-constant solution branches");
  c_branch->add_option("--d", bo.d, "sphere dimension");
  c_branch->add_option("--p", bo.p, "interpolation exponent");
  c_branch->add_option("--ell", bo.ell, "bifurcating mode");
  c_branch->add_option("--direction", bo.direction, "+1 or -1");
  c_branch->add_option("--mesh", bo.mesh, "collocation nodes");
  c_branch->add_option("--max-points", bo.max_points, "continuation step cap");
  c_branch->add_option("--out", bo.out, "branch CSV");

  CLI::App* c_kappa = app.add_subcommand("kappa", "best improvement constant kappa_p");
  c_kappa->add_option("--d", ko.d, "sphere dimension");
  c_kappa->add_option("--p", ko.p, "exponent; repeatable");
  c_kappa->add_option("--mesh", ko.mesh, "collocation nodes");
  c_kappa->add_option("--out", ko.out, "CSV (p,kappa_p)");

  CLI::App* c_ckn = app.add_subcommand("ckn-map", "symmetry / symmetry-breaking map");
  c_ckn->add_option("--d", mo.d, "ambient dimension");
  c_ckn->add_option("--a-min", mo.a_min, "a range start");
  c_ckn->add_option("--a-max", mo.a_max, "a range end");
  c_ckn->add_option("--b-min", mo.b_min, "b range start");
  c_ckn->add_option("--b-max", mo.b_max, "b range end");
  c_ckn->add_option("--na", mo.na, "a samples");
  c_ckn->add_option("--nb", mo.nb, "b samples");
  c_ckn->add_option("--out", mo.out, "CSV (a,b,region,b_fs,margin)");

  CLI::App* c_check = app.add_subcommand("check", "evaluate functionals on a stored profile");
  c_check->add_option("--functional", ho.functional, "free|relative|gns-stability|heisenberg");
  c_check->add_option("--profile", ho.profile, "profile CSV (r,value)");
  c_check->add_option("--d", ho.d, "ambient dimension");
  c_check->add_option("--m", ho.m, "diffusion exponent");
  c_check->add_option("--p", ho.p, "interpolation exponent");
  c_check->add_option("--n", ho.n, "weight dimension (defaults to d)");
  c_check->add_option("--mass", ho.mass, "attractor mass");
  c_check->add_option("--out", ho.out, "also write the JSON here");

  CLI::App* c_repro = app.add_subcommand("reproduce", "regenerate the headline figures");
  c_repro->add_option("figure", ro.figure, "fig1|fig2|fig3")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2", "fig3"}));
  c_repro->add_option("--out-dir", ro.out_dir, "output directory");
  c_repro->add_option("--mesh", ro.mesh, "collocation nodes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error(2, e.what());
    return 2;
  }

  try {
    ParamMap pm;
    std::string command;
    std::string* out_field = nullptr;
    std::function<void()> runner;
    if (app.got_subcommand(c_constants)) {
      command = "constants";
      pm.integer("d", &co.d);
      pm.number("m", &co.m);
      pm.number("p", &co.p);
      pm.number("a", &co.a);
      pm.number("b", &co.b);
      pm.number("beta", &co.beta);
      pm.number("gamma", &co.gamma);
      pm.number("A", &co.A);
      pm.number("G", &co.G);
      pm.number("eps", &co.eps);
      pm.number("mass", &co.mass);
      pm.text("out", &co.out);
      out_field = &co.out;
      runner = [&] { run_constants(co); };
    } else if (app.got_subcommand(c_profile)) {
      command = "profile";
      pm.text("family", &po.family);
      pm.integer("d", &po.d);
      pm.number("m", &po.m);
      pm.number("p", &po.p);
      pm.number("a", &po.a);
      pm.number("b", &po.b);
      pm.number("mass", &po.mass);
      pm.integer("nodes", &po.nodes);
      pm.number("rmax", &po.rmax);
      pm.number("stretch", &po.stretch);
      pm.text("out", &po.out);
      out_field = &po.out;
      runner = [&] { run_profile(po); };
    } else if (app.got_subcommand(c_flow)) {
      command = "flow";
      pm.text("kind", &fo.kind);
      pm.integer("d", &fo.d);
      pm.number("m", &fo.m);
      pm.number("n", &fo.n);
      pm.number("dt", &fo.dt);
      pm.number("t-end", &fo.t_end);
      pm.integer("record-every", &fo.record_every);
      pm.text("scheme", &fo.scheme);
      pm.number("theta", &fo.theta);
      pm.number("target-eps", &fo.target_eps);
      pm.text("potential", &fo.potential);
      pm.text("datum", &fo.datum);
      pm.text("out", &fo.out);
      out_field = &fo.out;
      runner = [&] { run_flow(fo); };
    } else if (app.got_subcommand(c_spectrum)) {
      command = "spectrum";
      pm.text("operator", &so.op);
      pm.integer("d", &so.d);
      pm.number("m", &so.m);
      pm.integer("level", &so.level);
      pm.integer("mesh", &so.mesh);
      pm.integer("n-modes", &so.n_modes);
      pm.flag("antipodal", &so.antipodal);
      pm.text("potential", &so.potential);
      pm.text("out", &so.out);
      out_field = &so.out;
      runner = [&] { run_spectrum(so); };
    } else if (app.got_subcommand(c_branch)) {
      command = "branch";
      pm.integer("d", &bo.d);
      pm.number("p", &bo.p);
      pm.integer("ell", &bo.ell);
      pm.integer("direction", &bo.direction);
      pm.integer("mesh", &bo.mesh);
      pm.integer("max-points", &bo.max_points);
      pm.text("out", &bo.out);
      out_field = &bo.out;
      runner = [&] { run_branch(bo); };
    } else if (app.got_subcommand(c_kappa)) {
      command = "kappa";
      pm.integer("d", &ko.d);
      pm.numbers("p", &ko.p);
      pm.integer("mesh", &ko.mesh);
      pm.text("out", &ko.out);
      out_field = &ko.out;
      runner = [&] { run_kappa(ko); };
    } else if (app.got_subcommand(c_ckn)) {
      command = "ckn-map";
      pm.integer("d", &mo.d);
      pm.number("a-min", &mo.a_min);
      pm.number("a-max", &mo.a_max);
      pm.number("b-min", &mo.b_min);
      pm.number("b-max", &mo.b_max);
      pm.integer("na", &mo.na);
      pm.integer("nb", &mo.nb);
      pm.text("out", &mo.out);
      out_field = &mo.out;
      runner = [&] { run_ckn_map(mo); };
    } else if (app.got_subcommand(c_check)) {
      command = "check";
      pm.text("functional", &ho.functional);
      pm.text("profile", &ho.profile);
      pm.integer("d", &ho.d);
      pm.number("m", &ho.m);
      pm.number("p", &ho.p);
      pm.number("n", &ho.n);
      pm.number("mass", &ho.mass);
      pm.text("out", &ho.out);
      out_field = &ho.out;
      runner = [&] { run_check(ho); };
    } else if (app.got_subcommand(c_repro)) {
      command = "reproduce";
      pm.text("figure", &ro.figure);
      pm.text("out-dir", &ro.out_dir);
      pm.integer("mesh", &ro.mesh);
      runner = [&] { run_reproduce(ro); };
    } else {
      throw std::invalid_argument("no subcommand selected");
    }

    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw std::invalid_argument("cannot open config file: " + config_path);
      json cfg;
      try {
        cfg = json::parse(is);
      } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
      }
      if (!cfg.is_object()) throw std::invalid_argument("config must be a JSON object");
      for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        const std::string& key = it.key();
        if (key == "command") {
          if (!it.value().is_string() || it.value().get<std::string>() != command)
            throw std::invalid_argument("config command does not match subcommand '" + command + "'");
        } else if (key == "parameters") {
          if (!it.value().is_object())
            throw std::invalid_argument("config parameters must be an object");
          pm.apply(it.value());
        } else if (key == "output_path") {
          if (!it.value().is_string())
            throw std::invalid_argument("config output_path must be a string");
          if (out_field == nullptr)
            throw std::invalid_argument("command '" + command + "' takes no output_path");
          *out_field = it.value().get<std::string>();
        } else if (key == "seed") {
          if (!it.value().is_number_integer())
            throw std::invalid_argument("config seed must be an integer");
          seed = it.value().get<int>();
        } else if (key == "constants_overrides") {
          if (!it.value().is_object())
            throw std::invalid_argument("config constants_overrides must be an object");
          for (auto jt = it.value().begin(); jt != it.value().end(); ++jt) {
            const std::string& name = jt.key();
            if (!jt.value().is_number())
              throw std::invalid_argument("constants override '" + name + "' must be a number");
            double v = jt.value().get<double>();
            if (name == "c_star")
              co.thresh.c_star = v;
            else if (name == "a_exp")
              co.thresh.a_exp = v;
            else if (name == "eps0")
              co.thresh.eps0 = v;
            else if (name == "chi")
              co.thresh.chi = v;
            else
              throw std::invalid_argument("unknown constants override '" + name + "'");
          }
        } else {
          throw std::invalid_argument("unknown config key '" + key + "'");
        }
      }
    }
    (void)seed;  // all current commands are deterministic; kept for the run-config contract

    runner();
    return 0;
  } catch (const std::invalid_argument& e) {
    emit_error(2, e.what());
    return 2;
  } catch (const std::runtime_error& e) {
    emit_error(3, e.what());
    return 3;
  } catch (const std::exception& e) {
    emit_error(3, e.what());
    return 3;
  }
}

}  // namespace entroflow::cli
