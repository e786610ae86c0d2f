#include <arm_neon.h>

#include "dttc/kernels.hpp"

namespace dttc::kernels::neon {

double dot(const double* w, const float* x, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const float32x4_t xf = vld1q_f32(x + k);
    acc0 = vfmaq_f64(acc0, vld1q_f64(w + k), vcvt_f64_f32(vget_low_f32(xf)));
    acc1 = vfmaq_f64(acc1, vld1q_f64(w + k + 2), vcvt_high_f64_f32(xf));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; k < n; ++k) acc += w[k] * static_cast<double>(x[k]);
  return acc;
}

void axpy(double alpha, const float* x, double* y, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const float32x4_t xf = vld1q_f32(x + k);
    vst1q_f64(y + k, vfmaq_f64(vld1q_f64(y + k), a, vcvt_f64_f32(vget_low_f32(xf))));
    vst1q_f64(y + k + 2, vfmaq_f64(vld1q_f64(y + k + 2), a, vcvt_high_f64_f32(xf)));
  }
  for (; k < n; ++k) y[k] += alpha * static_cast<double>(x[k]);
}

}  // namespace dttc::kernels::neon
