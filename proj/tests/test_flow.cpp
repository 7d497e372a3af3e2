#include "doctest.h"

#include "entroflow/core.hpp"
#include "entroflow/flow.hpp"

#include <cmath>
#include <vector>

using namespace entroflow;
using flow::FlowConfig;
using flow::FlowResult;

namespace {

RadialProfile perturbed_attractor(int d, double m, int n, double rmax, double amp,
                                  double center) {
  ProblemParams fd = ProblemParams::fast_diffusion(d, m);
  RadialProfile g = make_grid(n, rmax, 3.0, static_cast<double>(d));
  RadialProfile B = barenblatt(fd, g);
  for (std::size_t i = 0; i < B.size(); ++i) {
    double r = B.r[i];
    B.values[i] *= 1.0 + amp * std::exp(-(r - center) * (r - center));
  }
  return B;
}

}  // namespace

TEST_SUITE("flow") {

TEST_CASE("free flow keeps mass and never raises the entropy power") {
  ProblemParams fd = ProblemParams::fast_diffusion(1, 0.75);
  RadialProfile u0 = perturbed_attractor(1, 0.75, 400, 15.0, 0.15, 1.5);
  FlowConfig cfg;
  cfg.params = fd;
  cfg.dt = 1e-3;
  cfg.t_end = 0.4;
  cfg.record_every = 40;
  FlowResult run = flow::run_free_fd(u0, cfg);
  REQUIRE(run.records.size() >= 5);
  double m0 = run.records.front().mass;
  for (std::size_t k = 0; k < run.records.size(); ++k) {
    CHECK(std::abs(run.records[k].mass - m0) <= 1e-11 * std::abs(m0));
    if (k > 0)
      CHECK(run.records[k].G <= run.records[k - 1].G * (1.0 + 1e-10) + 1e-12);
  }
}

TEST_CASE("free flow from the self-similar profile keeps the power nearly flat") {
  // G is exactly conserved along the self-similar solution; the discrete
  // drift over a short window must stay at quadrature scale
  ProblemParams fd = ProblemParams::fast_diffusion(3, 0.8);
  RadialProfile g = make_grid(600, 30.0, 3.0, 3.0);
  RadialProfile B = barenblatt(fd, g);
  FlowConfig cfg;
  cfg.params = fd;
  cfg.dt = 1e-3;
  cfg.t_end = 0.1;
  cfg.record_every = 20;
  FlowResult run = flow::run_free_fd(B, cfg);
  double g0 = run.records.front().G, g1 = run.records.back().G;
  CHECK(std::abs(g1 - g0) / g0 <= 2e-3);
  for (std::size_t k = 1; k < run.records.size(); ++k)
    CHECK(run.records[k].G <= run.records[k - 1].G * (1.0 + 1e-10));
}

TEST_CASE("rescaled flow holds the attractor fixed") {
  ProblemParams fd = ProblemParams::fast_diffusion(3, 0.8);
  RadialProfile g = make_grid(400, 20.0, 3.0, 3.0);
  RadialProfile B = barenblatt(fd, g);
  FlowConfig cfg;
  cfg.params = fd;
  cfg.params.M = B.integrate_values();
  cfg.dt = 1e-3;
  cfg.t_end = 0.2;
  cfg.record_every = 50;
  FlowResult run = flow::run_rescaled_fp(B, cfg);
  double drift = 0;
  for (std::size_t i = 0; i < B.size(); ++i)
    drift = std::max(drift, std::abs(run.profiles.back()[i] - B.values[i]) /
                                std::max(B.values[i], 1e-12));
  CHECK(drift <= 1e-9);
  CHECK(std::abs(run.records.back().F) <= 1e-10);
}

TEST_CASE("rescaled flow contracts the relative entropy at rate four") {
  RadialProfile v0 = perturbed_attractor(3, 0.8, 400, 20.0, 0.2, 1.0);
  FlowConfig cfg;
  cfg.params = ProblemParams::fast_diffusion(3, 0.8);
  cfg.params.M = v0.integrate_values();
  cfg.dt = 1e-3;
  cfg.t_end = 0.6;
  cfg.record_every = 60;
  FlowResult run = flow::run_rescaled_fp(v0, cfg);
  double F0 = run.records.front().F;
  REQUIRE(F0 > 0);
  for (const auto& rec : run.records) {
    CHECK(rec.F <= F0 * std::exp(-4.0 * rec.t) * (1.0 + 1e-3) + 1e-15);
    if (rec.F > 1e-12 * F0) CHECK(rec.Q >= 4.0 - 1e-3);
  }
  CHECK(run.records.back().F < 0.1 * F0);
}

TEST_CASE("mass is conserved by both nonlinear schemes") {
  RadialProfile v0 = perturbed_attractor(3, 0.8, 300, 20.0, 0.1, 2.0);
  FlowConfig cfg;
  cfg.params = ProblemParams::fast_diffusion(3, 0.8);
  cfg.params.M = v0.integrate_values();
  cfg.dt = 2e-3;
  cfg.t_end = 0.2;
  cfg.record_every = 25;
  for (int which = 0; which < 2; ++which) {
    FlowResult run = which == 0 ? flow::run_free_fd(v0, cfg) : flow::run_rescaled_fp(v0, cfg);
    double m0 = run.records.front().mass;
    CHECK(std::abs(run.records.back().mass - m0) <= 1e-11 * std::abs(m0));
  }
}

TEST_CASE("monotonicity identity mismatch shrinks with the step") {
  RadialProfile u0 = perturbed_attractor(3, 0.8, 400, 25.0, 0.2, 1.5);
  auto mismatch = [&](double dt) {
    FlowConfig cfg;
    cfg.params = ProblemParams::fast_diffusion(3, 0.8);
    cfg.dt = dt;
    cfg.t_end = 0.25;
    cfg.record_every = std::max(1, static_cast<int>(std::lround(0.0125 / dt)));
    FlowResult run = flow::run_free_fd(u0, cfg);
    return flow::verify_identity_F(run);
  };
  double e1 = mismatch(1e-3);
  CHECK(e1 < 0.05);
  double e2 = mismatch(5e-4);
  CHECK(e2 < e1);
}

TEST_CASE("early-window lower bound: closed form and limits") {
  CHECK(flow::itl_bound(0.0, 1.0) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(flow::itl_bound(0.0, 0.3) == doctest::Approx(4.3).epsilon(1e-14));
  CHECK(flow::itl_bound(0.25, 1.0) == doctest::Approx(4.31769).epsilon(3e-6));
  // decreasing in the window length, down to the asymptotic value four
  double prev = flow::itl_bound(0.0, 1.0);
  for (double T : {0.1, 0.25, 0.5, 1.0, 2.0, 5.0}) {
    double b = flow::itl_bound(T, 1.0);
    CHECK(b < prev);
    CHECK(b > 4.0);
    prev = b;
  }
  CHECK(flow::itl_bound(20.0, 1.0) == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("early-window check accepts a flow started well off the attractor") {
  RadialProfile v0 = perturbed_attractor(3, 0.8, 400, 20.0, 0.35, 0.8);
  FlowConfig cfg;
  cfg.params = ProblemParams::fast_diffusion(3, 0.8);
  cfg.params.M = v0.integrate_values();
  cfg.dt = 1e-3;
  cfg.t_end = 0.5;
  cfg.record_every = 25;
  FlowResult run = flow::run_rescaled_fp(v0, cfg);
  bool conclusive = false;
  bool ok = flow::initial_time_layer_check(run, 0.4, 0.5, &conclusive);
  CHECK(ok);
}

TEST_CASE("pure diffusion dissipates the squared norm at the free-space rate") {
  RadialProfile w0 = make_grid(1501, 200.0, 1.0, 1.0);
  w0.values.resize(w0.size());
  for (std::size_t i = 0; i < w0.size(); ++i)
    w0.values[i] = std::exp(-w0.r[i] * w0.r[i]);
  FlowConfig cfg;
  cfg.params = ProblemParams::fast_diffusion(1, 0.75);
  cfg.dt = 1e-3;
  cfg.t_end = 2.0;
  cfg.record_every = 100;
  FlowResult run = flow::run_linear(flow::LinearKind::heat, w0, cfg);
  // log-log slope of the squared norm over the self-similar window
  std::vector<double> xs, ys;
  for (const auto& rec : run.records)
    if (rec.t >= 0.5) {
      xs.push_back(std::log(rec.t));
      ys.push_back(std::log(rec.E));
    }
  REQUIRE(xs.size() >= 3);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  double nn = static_cast<double>(xs.size());
  double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  CHECK(slope == doctest::Approx(-0.5).epsilon(0.25));
}

TEST_CASE("confined linear flow relaxes at twice the measure constant") {
  RadialProfile w0 = make_grid(801, 20.0, 1.0, 1.0);
  w0.values.resize(w0.size());
  for (std::size_t i = 0; i < w0.size(); ++i) {
    double y = w0.r[i] - 11.0;
    w0.values[i] = std::exp(-0.5 * y * y) + 0.05;
  }
  FlowConfig cfg;
  cfg.params = ProblemParams::fast_diffusion(1, 0.75);
  cfg.dt = 1e-4;
  cfg.t_end = 2.0;
  cfg.record_every = 1000;
  auto phi = [](double x) {
    double y = x - 10.0;
    return 0.5 * y * y;
  };
  FlowResult run = flow::run_linear(flow::LinearKind::ou, w0, cfg, phi);
  CHECK(run.fitted_rates.entropy_decay == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("sandwich threshold time is hit on a long relaxation") {
  RadialProfile v0 = perturbed_attractor(3, 0.8, 300, 20.0, 0.25, 1.2);
  FlowConfig cfg;
  cfg.params = ProblemParams::fast_diffusion(3, 0.8);
  cfg.params.M = v0.integrate_values();
  cfg.dt = 2e-3;
  cfg.t_end = 2.0;
  cfg.record_every = 50;
  cfg.target_eps = 0.05;
  FlowResult run = flow::run_rescaled_fp(v0, cfg);
  REQUIRE(std::isfinite(run.empirical_T_star));
  // the reported time is the first record at which the sandwich closes
  bool seen = false;
  for (const auto& rec : run.records)
    if (rec.t >= run.empirical_T_star) {
      CHECK(rec.sandwich_eps <= cfg.target_eps);
      seen = true;
      break;
    }
  CHECK(seen);
}

}
