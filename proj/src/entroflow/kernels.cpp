#include "entroflow/kernels.hpp"

#include <cmath>

namespace entroflow::kernels {

double dot2_scalar(const double* w, const double* a, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 = std::fma(w[i], a[i], s0);
    s1 = std::fma(w[i + 1], a[i + 1], s1);
    s2 = std::fma(w[i + 2], a[i + 2], s2);
    s3 = std::fma(w[i + 3], a[i + 3], s3);
  }
  double s = (s0 + s1) + (s2 + s3);
  for (; i < n; ++i) s = std::fma(w[i], a[i], s);
  return s;
}

double dot3_scalar(const double* w, const double* a, const double* b, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 = std::fma(w[i] * a[i], b[i], s0);
    s1 = std::fma(w[i + 1] * a[i + 1], b[i + 1], s1);
    s2 = std::fma(w[i + 2] * a[i + 2], b[i + 2], s2);
    s3 = std::fma(w[i + 3] * a[i + 3], b[i + 3], s3);
  }
  double s = (s0 + s1) + (s2 + s3);
  for (; i < n; ++i) s = std::fma(w[i] * a[i], b[i], s);
  return s;
}

#if defined(__x86_64__) || defined(_M_X64)
double dot2_avx2(const double* w, const double* a, std::size_t n);
double dot3_avx2(const double* w, const double* a, const double* b, std::size_t n);

namespace {
bool have_avx2() {
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
}
}

double dot2(const double* w, const double* a, std::size_t n) {
  return have_avx2() ? dot2_avx2(w, a, n) : dot2_scalar(w, a, n);
}
double dot3(const double* w, const double* a, const double* b, std::size_t n) {
  return have_avx2() ? dot3_avx2(w, a, b, n) : dot3_scalar(w, a, b, n);
}
const char* active_backend() { return have_avx2() ? "avx2" : "scalar"; }
#else
double dot2(const double* w, const double* a, std::size_t n) { return dot2_scalar(w, a, n); }
double dot3(const double* w, const double* a, const double* b, std::size_t n) {
  return dot3_scalar(w, a, b, n);
}
const char* active_backend() { return "scalar"; }
#endif

}
