#include <arm_neon.h>

#include "auditflow/kernels/kernels.hpp"

namespace auditflow::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
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

double sum_squares_neon(const double* a, std::size_t n) {
  return dot_neon(a, a, n);
}

void dot_rows_neon(const double* matrix, std::size_t rows, std::size_t dim,
                   const double* query, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    out[r] = dot_neon(matrix + r * dim, query, dim);
  }
}

}  // namespace

const KernelTable* neon_table() {
  static const KernelTable table{Isa::Neon, &dot_neon, &sum_squares_neon,
                                 &dot_rows_neon};
  return &table;
}

}  // namespace auditflow::kernels
