#pragma once

// Inner-loop arithmetic for the per-level affine heads. Every routine has a
// scalar reference implementation; SIMD variants are chosen once at runtime
// from the host CPU and can be overridden (tests, DTTC_ISA=scalar).

#include <cstddef>
#include <span>
#include <string_view>

namespace dttc::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

// The instruction set currently used by the dispatching entry points.
Isa active_isa();

// True when `isa` can run on this host and was compiled in.
bool isa_available(Isa isa);

// Forces the dispatcher onto `isa`. Throws std::invalid_argument if unavailable.
void set_isa(Isa isa);

// sum_k w[k] * x[k], accumulated in double.
double dot(std::span<const double> w, std::span<const float> x);

// y[k] += alpha * x[k]
void axpy(double alpha, std::span<const float> x, std::span<double> y);

// out[r] = bias[r] + dot(weights.row(r), x) for a row-major rows x x.size() matrix.
void affine(std::span<const double> weights, std::span<const double> bias, std::span<const float> x,
            std::span<double> out);

namespace scalar {
double dot(const double* w, const float* x, std::size_t n);
void axpy(double alpha, const float* x, double* y, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* w, const float* x, std::size_t n);
void axpy(double alpha, const float* x, double* y, std::size_t n);
}  // namespace avx2

namespace neon {
double dot(const double* w, const float* x, std::size_t n);
void axpy(double alpha, const float* x, double* y, std::size_t n);
}  // namespace neon

}  // namespace dttc::kernels
