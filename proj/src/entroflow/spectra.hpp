#pragma once

#include <functional>
#include <string>
#include <vector>

namespace entroflow::spectra {

struct EigenResult {
  std::vector<double> eigenvalues;  // ascending
  std::vector<std::string> constraints;
  int mesh_size = 0;
  double richardson_estimate = 0;
};

// k smallest eigenvalues of a symmetric tridiagonal matrix by Sturm bisection
std::vector<double> tridiag_eigenvalues(const std::vector<double>& diag,
                                        const std::vector<double>& off, int k);

// spectral gap of the weighted linearization around the stationary profile,
// gradient weight (1+r^2)^{1/(m-1)} and mass weight (1+r^2)^{(2-m)/(m-1)},
// radial sector plus first angular sector, moment constraints by deflation
EigenResult hardy_poincare_spectrum(int d, double m, int constraint_level, int mesh);

// Poincare constant of the measure e^{-phi} dx on the line via the
// symmetrized Schrodinger form; Richardson-extrapolated over (mesh, 2*mesh)
double ou_kappa0(const std::function<double(double)>& phi, int mesh);

// optimal constant of the p-interpolation quotient by projected-gradient
// multi-start; p = 2 uses the entropy quotient
double kappa1_minimize(const std::function<double(double)>& phi, double p, int mesh,
                       unsigned seed, std::vector<double>* minimizer = nullptr,
                       std::vector<double>* minimizer_grid = nullptr);

// eigenvalues of the zonal Laplace-Beltrami operator -(1-z^2)h'' + d z h'
EigenResult sphere_zonal_spectrum(int d, int n_modes, int mesh, bool antipodal = false);

}
