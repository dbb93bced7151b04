#include "parafac/simd/kernels.hpp"

namespace parafac::simd {
namespace {

template <typename Real>
Real dot_ref(const Real* a, const Real* b, std::size_t n) {
  Real acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename Real>
double sumsq_ref(const Real* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = static_cast<double>(a[i]);
    acc += v * v;
  }
  return acc;
}

template <typename Real>
void gemv_ref(const Real* a, std::size_t rows, std::size_t cols, std::size_t lda, const Real* x,
              Real* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] += dot_ref(a + r * lda, x, cols);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      &dot_ref<double>, &dot_ref<float>, &sumsq_ref<double>, &sumsq_ref<float>,
      &gemv_ref<double>, &gemv_ref<float>,
  };
  return table;
}

}  // namespace parafac::simd
