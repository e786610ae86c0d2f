#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "dttc/kernels.hpp"

namespace dttc::kernels {

namespace {

using DotFn = double (*)(const double*, const float*, std::size_t);
using AxpyFn = void (*)(double, const float*, double*, std::size_t);

struct Table {
  Isa isa;
  DotFn dot;
  AxpyFn axpy;
};

constexpr Table kScalar{Isa::Scalar, &scalar::dot, &scalar::axpy};
#if defined(DTTC_HAVE_AVX2_TU)
constexpr Table kAvx2{Isa::Avx2, &avx2::dot, &avx2::axpy};
#endif
#if defined(DTTC_HAVE_NEON_TU)
constexpr Table kNeon{Isa::Neon, &neon::dot, &neon::axpy};
#endif

const Table* table_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &kScalar;
    case Isa::Avx2:
#if defined(DTTC_HAVE_AVX2_TU)
      if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &kAvx2;
#endif
      return nullptr;
    case Isa::Neon:
#if defined(DTTC_HAVE_NEON_TU)
      return &kNeon;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const Table* detect() {
  if (const char* env = std::getenv("DTTC_ISA"); env && std::string(env) == "scalar") return &kScalar;
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (const auto* t = table_for(isa)) return t;
  }
  return &kScalar;
}

std::atomic<const Table*>& current() {
  static std::atomic<const Table*> table{detect()};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

Isa active_isa() { return current().load()->isa; }

bool isa_available(Isa isa) { return table_for(isa) != nullptr; }

void set_isa(Isa isa) {
  const auto* t = table_for(isa);
  if (!t) throw std::invalid_argument("kernels: ISA '" + std::string(isa_name(isa)) + "' is not available on this host");
  current().store(t);
}

double dot(std::span<const double> w, std::span<const float> x) {
  if (w.size() != x.size()) throw std::invalid_argument("kernels::dot: length mismatch");
  return current().load()->dot(w.data(), x.data(), x.size());
}

void axpy(double alpha, std::span<const float> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("kernels::axpy: length mismatch");
  current().load()->axpy(alpha, x.data(), y.data(), x.size());
}

void affine(std::span<const double> weights, std::span<const double> bias, std::span<const float> x,
            std::span<double> out) {
  const auto rows = out.size();
  const auto cols = x.size();
  if (bias.size() != rows || weights.size() != rows * cols) {
    throw std::invalid_argument("kernels::affine: shape mismatch");
  }
  const auto fn = current().load()->dot;
  for (std::size_t r = 0; r < rows; ++r) out[r] = bias[r] + fn(weights.data() + r * cols, x.data(), cols);
}

}  // namespace dttc::kernels
