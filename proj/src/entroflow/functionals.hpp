#pragma once

#include "entroflow/core.hpp"

#include <functional>
#include <limits>

namespace entroflow::functionals {

// one row of flow diagnostics; fields not produced by a given evaluator stay NaN
struct DiagnosticsRecord {
  double t = 0;
  double mass = 0;
  double E = 0;
  double F = std::numeric_limits<double>::quiet_NaN();
  double I_free = std::numeric_limits<double>::quiet_NaN();
  double I_rel = std::numeric_limits<double>::quiet_NaN();
  double Q = std::numeric_limits<double>::quiet_NaN();
  double G = std::numeric_limits<double>::quiet_NaN();
  double sandwich_eps = std::numeric_limits<double>::quiet_NaN();
};

struct RelativePair {
  double F = 0;
  double I_rel = 0;
  double Q = std::numeric_limits<double>::quiet_NaN();  // I_rel/F, defined only when F > 0
};

struct BestMatch {
  double sigma = 1;      // matched profile is amplitude * g(r / sigma)
  double amplitude = 1;
  double mass = 0;            // matched moments of f^{2p}
  double second_moment = 0;
};

struct StabilityReport {
  double deficit = 0;
  double rel_entropy = 0;
  double fisher_distance = 0;
  double pck_lower = 0;
  BestMatch best_match;
};

struct HeisenbergPair {
  double lhs = 0;
  double rhs = 0;
};

// entropy E, free Fisher information and the Renyi power G of a nonnegative profile
DiagnosticsRecord free_diagnostics(const RadialProfile& u, const ProblemParams& params);

// relative entropy / relative Fisher pair; requires the mass of the attractor
RelativePair relative_pair(const RadialProfile& v, const ProblemParams& params);

// deficit report in the moment-matched frame; see the module notes in README
StabilityReport gns_stability(const RadialProfile& f, const ProblemParams& params);

// lhs <= rhs is the uncertainty-principle contract
HeisenbergPair heisenberg_check(const RadialProfile& f, double p);

// remainder of the improved interpolation inequality for zonal functions on the sphere
double sphere_improved_deficit(const std::function<double(double)>& f, int d, double p,
                               int mesh = 64);

}
