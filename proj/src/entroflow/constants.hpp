#pragma once

#include "entroflow/core.hpp"

namespace entroflow::constants {

struct SphereExponents {
  double two_sharp = 0;  // +inf when d == 1
  double gamma_p = 0;
  double theta = 0;
};

enum class CknFamily { critical, subcritical };

enum class Region { symmetry, symmetry_breaking, inadmissible };

struct RegimeVerdict {
  Region region = Region::inadmissible;
  double boundary_value = 0;  // threshold in b (critical) or beta (subcritical); NaN if complex
  double margin = 0;          // signed distance to the threshold, >= 0 means symmetry
};

struct CknConstant {
  double formula_value = 0;  // closed-form transcription; known-bad typesetting upstream
  bool formula_reliable = false;
  double quadrature_value = 0;  // quotient at the radial optimizer; authoritative
};

struct ThresholdConfig {
  double c_star = 1.0;
  double a_exp = 1.0;
  double eps0 = 0.5;
  double chi = 0.5;
};

double sobolev_constant(int d);
SphereExponents sphere_exponents(int d, double p);
double sphere_delta(int d, double p, double m);
RegimeVerdict felli_schneider(const CknParams& params, CknFamily family);
double alpha_fs(int d, double n);
double gns_optimal_constant(int d, double p);
CknConstant ckn_symmetric_constant(const CknParams& params);
double renyi_growth_c0(int d, double m, double M);
double threshold_time(int d, double m, double A, double G, double eps,
                      const ThresholdConfig& cfg = {});

// true area of the unit sphere S^{d-1} (2 when d = 1), used by whole-space quotients
double sphere_area(int d);

}
