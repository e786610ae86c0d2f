// Built with -mavx2 -mfma; only reached when the dispatcher has confirmed
// both features on the host.
#include <immintrin.h>

#include "dttc/kernels.hpp"

namespace dttc::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot(const double* w, const float* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    const __m256 xf = _mm256_loadu_ps(x + k);
    const __m256d x0 = _mm256_cvtps_pd(_mm256_castps256_ps128(xf));
    const __m256d x1 = _mm256_cvtps_pd(_mm256_extractf128_ps(xf, 1));
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(w + k), x0, acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(w + k + 4), x1, acc1);
  }
  if (k + 4 <= n) {
    const __m256d x0 = _mm256_cvtps_pd(_mm_loadu_ps(x + k));
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(w + k), x0, acc0);
    k += 4;
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) acc += w[k] * static_cast<double>(x[k]);
  return acc;
}

void axpy(double alpha, const float* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d xv = _mm256_cvtps_pd(_mm_loadu_ps(x + k));
    _mm256_storeu_pd(y + k, _mm256_fmadd_pd(a, xv, _mm256_loadu_pd(y + k)));
  }
  for (; k < n; ++k) y[k] += alpha * static_cast<double>(x[k]);
}

}  // namespace dttc::kernels::avx2
