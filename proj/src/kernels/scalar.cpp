#include "auditflow/kernels/kernels.hpp"

namespace auditflow::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_squares_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

void dot_rows_scalar(const double* matrix, std::size_t rows, std::size_t dim,
                     const double* query, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    out[r] = dot_scalar(matrix + r * dim, query, dim);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::Scalar, &dot_scalar, &sum_squares_scalar,
                                 &dot_rows_scalar};
  return table;
}

}  // namespace auditflow::kernels
