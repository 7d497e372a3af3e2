#pragma once
#include <cstddef>

// Hot reduction kernels used by the quadrature paths. A scalar reference
// implementation always exists; on x86 an AVX2+FMA variant is selected at
// runtime when the CPU supports it. Both variants run the same fused
// multiply-adds into four independent partial sums, so scalar and vector
// results are bitwise identical.
namespace entroflow::kernels {

// sum_i w[i] * a[i]
double dot2(const double* w, const double* a, std::size_t n);
// sum_i w[i] * a[i] * b[i]
double dot3(const double* w, const double* a, const double* b, std::size_t n);

// Scalar reference versions, exposed for equivalence testing.
double dot2_scalar(const double* w, const double* a, std::size_t n);
double dot3_scalar(const double* w, const double* a, const double* b, std::size_t n);

// Name of the active implementation: "scalar" or "avx2".
const char* active_backend();

}
