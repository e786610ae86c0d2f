#include "dttc/kernels.hpp"

namespace dttc::kernels::scalar {

double dot(const double* w, const float* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += w[k] * static_cast<double>(x[k]);
  return acc;
}

void axpy(double alpha, const float* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * static_cast<double>(x[k]);
}

}  // namespace dttc::kernels::scalar
