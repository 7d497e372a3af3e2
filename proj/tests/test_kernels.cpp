#include "doctest.h"

#include "entroflow/kernels.hpp"

#include <cstring>
#include <random>
#include <vector>

using namespace entroflow;

namespace {

std::vector<double> random_vec(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("dispatched reductions agree bitwise with the scalar reference") {
  // both variants accumulate in four independent partial sums, so the
  // rounding order is identical and the results must match exactly
  for (std::size_t n : {0ul, 1ul, 2ul, 3ul, 4ul, 5ul, 7ul, 8ul, 15ul, 16ul, 17ul,
                        63ul, 64ul, 100ul, 1001ul, 4096ul}) {
    auto w = random_vec(n, 11 + static_cast<unsigned>(n));
    auto a = random_vec(n, 23 + static_cast<unsigned>(n));
    auto b = random_vec(n, 37 + static_cast<unsigned>(n));
    double d2 = kernels::dot2(w.data(), a.data(), n);
    double d2s = kernels::dot2_scalar(w.data(), a.data(), n);
    double d3 = kernels::dot3(w.data(), a.data(), b.data(), n);
    double d3s = kernels::dot3_scalar(w.data(), a.data(), b.data(), n);
    CHECK(std::memcmp(&d2, &d2s, sizeof d2) == 0);
    CHECK(std::memcmp(&d3, &d3s, sizeof d3) == 0);
  }
}

TEST_CASE("reductions match a long double accumulator") {
  const std::size_t n = 20000;
  auto w = random_vec(n, 5);
  auto a = random_vec(n, 6);
  auto b = random_vec(n, 7);
  long double r2 = 0, r3 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    r2 += static_cast<long double>(w[i]) * a[i];
    r3 += static_cast<long double>(w[i]) * a[i] * b[i];
  }
  CHECK(kernels::dot2(w.data(), a.data(), n) ==
        doctest::Approx(static_cast<double>(r2)).epsilon(1e-13));
  CHECK(kernels::dot3(w.data(), a.data(), b.data(), n) ==
        doctest::Approx(static_cast<double>(r3)).epsilon(1e-13));
}

TEST_CASE("empty input reduces to zero") {
  CHECK(kernels::dot2(nullptr, nullptr, 0) == 0.0);
  CHECK(kernels::dot3(nullptr, nullptr, nullptr, 0) == 0.0);
}

TEST_CASE("active backend reports a known implementation") {
  std::string name = kernels::active_backend();
  CHECK((name == "scalar" || name == "avx2"));
}

}
