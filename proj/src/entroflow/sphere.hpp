#pragma once

#include <string>
#include <vector>

namespace entroflow::sphere {

// Gauss-Legendre nodes ascending on (-1,1); long double keeps the collocation
// residual floor below the 1e-10 acceptance bar at mesh 128
struct GaussLegendre {
  std::vector<long double> z, w;
};
GaussLegendre gauss_legendre(int n);

// collocation bundle for zonal functions of z = cos(theta) on S^d
struct ZonalOperator {
  int d = 3;
  int n = 0;
  std::vector<long double> z;    // nodes ascending
  std::vector<long double> nu;   // normalized weights of the measure (1-z^2)^{d/2-1} dz
  std::vector<long double> lap;  // row-major n*n: (1-z^2) f'' - d z f'
};
ZonalOperator make_zonal_operator(int d, int mesh);

struct StepConfig {
  int mesh = 128;
  double ds0 = 0.02;          // initial arclength step
  double ds_max = 0.25;
  int max_points = 1200;
  double newton_tol = 1e-11;  // on the scaled update; residual checked separately
  double residual_bound = 1e-10;
  int newton_max_iter = 40;
  double amp0 = 1e-3;         // first amplitude away from the constant branch
  double lambda_max_factor = 3.0;  // stop when lambda leaves [0.1, factor*lambda_origin]
  double concentration_max = 1e6;  // max/mean ratio stop (loss of compactness proxy)
};

struct BranchPoint {
  double lambda = 0;
  double mu = 0;
  double arclength = 0;
  std::vector<double> profile;  // values at the Gauss nodes
  int jacobian_signature = 0;
  bool is_constant = false;
};

enum class BranchOrigin { constant_branch, bifurcation };
enum class BranchSymmetry { none, antipodal };

struct Branch {
  std::vector<BranchPoint> points;
  BranchOrigin origin = BranchOrigin::bifurcation;
  int ell = 0;
  BranchSymmetry symmetry = BranchSymmetry::none;
  bool truncated = false;
  std::string truncation_reason;
};

// collocation residual of -(p-2)[(1-z^2)u'' - d z u'] + lambda u - u^{p-1}
std::vector<double> residual(const std::vector<double>& u, double lambda, int d, double p);

// lambda at which the constant family loses stability in the ell-th zonal
// mode, located by a signature scan and bisection (independent of the
// closed-form ell(ell+d-1))
double detect_bifurcation(int d, double p, int ell, int mesh = 64);

// pseudo-arclength continuation away from the constant branch at lambda_ell
Branch continue_branch(int ell, int d, double p, int direction, const StepConfig& cfg = {});

struct MuCurvePoint {
  double lambda = 0;
  double mu = 0;
  bool certified = false;  // false where no computed branch covers this lambda
};
std::vector<MuCurvePoint> mu_of_lambda(int d, double p, const std::vector<double>& lambda_grid,
                                       const StepConfig& cfg = {});

// best constant in the antipodal interpolation inequality: the infimum of the
// quotient (p-2) <u, -Lap u> / (||u||_p^2 - ||u||_2^2) over non-constant even
// profiles, which is also the fixed point mu_a(lambda) = lambda of the branch
// map; p = 1 returns the even spectral gap 2(d+1)
double kappa_p(int d, double p, const StepConfig& cfg = {});

}
