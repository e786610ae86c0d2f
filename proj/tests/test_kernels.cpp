#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>
#include <vector>

#include "dttc/kernels.hpp"

using namespace dttc::kernels;

namespace {

struct IsaGuard {
  Isa saved = active_isa();
  ~IsaGuard() { set_isa(saved); }
};

std::vector<Isa> simd_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (isa_available(isa)) out.push_back(isa);
  }
  return out;
}

double simd_dot(Isa isa, const double* w, const float* x, std::size_t n) {
#if defined(__x86_64__)
  if (isa == Isa::Avx2) return avx2::dot(w, x, n);
#elif defined(__aarch64__)
  if (isa == Isa::Neon) return neon::dot(w, x, n);
#endif
  (void)isa;
  return scalar::dot(w, x, n);
}

void simd_axpy(Isa isa, double alpha, const float* x, double* y, std::size_t n) {
#if defined(__x86_64__)
  if (isa == Isa::Avx2) return avx2::axpy(alpha, x, y, n);
#elif defined(__aarch64__)
  if (isa == Isa::Neon) return neon::axpy(alpha, x, y, n);
#endif
  (void)isa;
  scalar::axpy(alpha, x, y, n);
}

double naive_dot(const std::vector<double>& w, const std::vector<float>& x) {
  double s = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * static_cast<double>(x[k]);
  return s;
}

}  // namespace

TEST_CASE("scalar is always available and selectable") {
  IsaGuard guard;
  CHECK(isa_available(Isa::Scalar));
  set_isa(Isa::Scalar);
  CHECK(active_isa() == Isa::Scalar);
  CHECK(isa_name(Isa::Avx2) == "avx2");
}

TEST_CASE("unavailable instruction sets are refused") {
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (!isa_available(isa)) CHECK_THROWS_AS(set_isa(isa), std::invalid_argument);
  }
}

TEST_CASE("scalar kernels against a naive loop") {
  std::vector<double> w = {1.0, -2.0, 0.5};
  std::vector<float> x = {2.0f, 1.0f, 4.0f};
  CHECK(scalar::dot(w.data(), x.data(), 3) == 2.0);
  std::vector<double> y = {1.0, 1.0, 1.0};
  scalar::axpy(0.5, x.data(), y.data(), 3);
  CHECK(y == std::vector<double>{2.0, 1.5, 3.0});
  CHECK(scalar::dot(w.data(), x.data(), 0) == 0.0);
}

TEST_CASE("property: SIMD kernels agree with scalar for every length 0..67") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Isa isa : simd_isas()) {
    CAPTURE(isa_name(isa));
    for (std::size_t n = 0; n < 68; ++n) {
      for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> w(n), y(n);
        std::vector<float> x(n);
        for (std::size_t k = 0; k < n; ++k) {
          w[k] = normal(rng);
          x[k] = static_cast<float>(normal(rng));
          y[k] = normal(rng);
        }
        const double ref = scalar::dot(w.data(), x.data(), n);
        const double got = simd_dot(isa, w.data(), x.data(), n);
        double scale = 0.0;
        for (std::size_t k = 0; k < n; ++k) scale += std::abs(w[k] * x[k]);
        REQUIRE(std::abs(got - ref) <= 1e-14 * (scale + 1.0));

        auto y_ref = y;
        auto y_got = y;
        scalar::axpy(-0.75, x.data(), y_ref.data(), n);
        simd_axpy(isa, -0.75, x.data(), y_got.data(), n);
        for (std::size_t k = 0; k < n; ++k) REQUIRE(std::abs(y_got[k] - y_ref[k]) <= 1e-15 * (std::abs(y_ref[k]) + 1.0));
      }
    }
  }
}

TEST_CASE("dispatching affine matches the triple loop under every ISA") {
  IsaGuard guard;
  std::mt19937_64 rng(32);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t rows = 5, cols = 19;
  std::vector<double> w(rows * cols), b(rows);
  std::vector<float> x(cols);
  for (auto& v : w) v = normal(rng);
  for (auto& v : b) v = normal(rng);
  for (auto& v : x) v = static_cast<float>(normal(rng));

  auto isas = simd_isas();
  isas.push_back(Isa::Scalar);
  for (Isa isa : isas) {
    set_isa(isa);
    std::vector<double> out(rows);
    affine(w, b, x, out);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::vector<double> row(w.begin() + r * cols, w.begin() + (r + 1) * cols);
      CHECK(out[r] == doctest::Approx(b[r] + naive_dot(row, x)).epsilon(1e-12));
    }
  }
}
