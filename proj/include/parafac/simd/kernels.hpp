#pragma once

// Inner-loop kernels used by the convolution and norm code.
//
// Every kernel has a scalar reference implementation and, where the target
// supports it, an AVX2+FMA (x86-64) or NEON (aarch64) variant. The variant is
// picked once at runtime from the CPU features; PARAFAC_SIMD=scalar in the
// environment forces the reference path. The vector variants reassociate the
// sums, so they agree with the reference to rounding, not bit for bit.

#include <cstddef>
#include <string_view>

namespace parafac::simd {

enum class Backend { kScalar, kAvx2, kNeon };

struct KernelTable {
  double (*dot_f64)(const double* a, const double* b, std::size_t n);
  float (*dot_f32)(const float* a, const float* b, std::size_t n);
  // Squared Euclidean norm; always accumulated in double.
  double (*sumsq_f64)(const double* a, std::size_t n);
  double (*sumsq_f32)(const float* a, std::size_t n);
  // y[r] += sum_c A[r * lda + c] * x[c] for r < rows, c < cols.
  void (*gemv_acc_f64)(const double* a, std::size_t rows, std::size_t cols, std::size_t lda,
                       const double* x, double* y);
  void (*gemv_acc_f32)(const float* a, std::size_t rows, std::size_t cols, std::size_t lda,
                       const float* x, float* y);
};

const KernelTable& scalar_kernels();
// nullptr when the variant was not compiled in for this target.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

bool backend_available(Backend backend);
Backend detect_backend();

// Currently selected table. Selection happens on first use.
const KernelTable& kernels();
Backend active_backend();
// Overrides the runtime choice; throws InvalidInput if the backend is unavailable.
void set_backend(Backend backend);

std::string_view backend_name(Backend backend);

// Typed front ends over the active table.
inline double dot(const double* a, const double* b, std::size_t n) { return kernels().dot_f64(a, b, n); }
inline float dot(const float* a, const float* b, std::size_t n) { return kernels().dot_f32(a, b, n); }
inline double sum_squares(const double* a, std::size_t n) { return kernels().sumsq_f64(a, n); }
inline double sum_squares(const float* a, std::size_t n) { return kernels().sumsq_f32(a, n); }
inline void gemv_acc(const double* a, std::size_t rows, std::size_t cols, std::size_t lda,
                     const double* x, double* y) {
  kernels().gemv_acc_f64(a, rows, cols, lda, x, y);
}
inline void gemv_acc(const float* a, std::size_t rows, std::size_t cols, std::size_t lda,
                     const float* x, float* y) {
  kernels().gemv_acc_f32(a, rows, cols, lda, x, y);
}

}  // namespace parafac::simd
