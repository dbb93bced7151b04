#include "parafac/simd/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>

namespace parafac::simd {
namespace {

double dot_f64(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

float dot_f32(const float* a, const float* b, std::size_t n) {
  float32x4_t acc0 = vdupq_n_f32(0.0f);
  float32x4_t acc1 = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = vfmaq_f32(acc0, vld1q_f32(a + i), vld1q_f32(b + i));
    acc1 = vfmaq_f32(acc1, vld1q_f32(a + i + 4), vld1q_f32(b + i + 4));
  }
  float acc = vaddvq_f32(vaddq_f32(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sumsq_f64(const double* a, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t v = vld1q_f64(a + i);
    acc = vfmaq_f64(acc, v, v);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += a[i] * a[i];
  return s;
}

double sumsq_f32(const float* a, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t v = vcvt_f64_f32(vld1_f32(a + i));
    acc = vfmaq_f64(acc, v, v);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double v = a[i];
    s += v * v;
  }
  return s;
}

void gemv_f64(const double* a, std::size_t rows, std::size_t cols, std::size_t lda, const double* x,
              double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] += dot_f64(a + r * lda, x, cols);
}

void gemv_f32(const float* a, std::size_t rows, std::size_t cols, std::size_t lda, const float* x,
              float* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] += dot_f32(a + r * lda, x, cols);
}

}  // namespace

const KernelTable* neon_kernels() {
  static const KernelTable table{&dot_f64, &dot_f32, &sumsq_f64, &sumsq_f32, &gemv_f64, &gemv_f32};
  return &table;
}

}  // namespace parafac::simd

#else

namespace parafac::simd {
const KernelTable* neon_kernels() { return nullptr; }
}  // namespace parafac::simd

#endif
