#pragma once

// Dense vector kernels used by similarity scoring and retrieval.
//
// Every kernel has a scalar reference implementation. Vectorized variants
// (AVX2+FMA on x86-64, NEON on aarch64) are compiled into separate
// translation units and selected once at runtime from CPU feature bits.
// Setting AUDITFLOW_ISA=scalar in the environment pins the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace auditflow::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_squares)(const double* a, std::size_t n);
  // out[r] = <matrix[r*dim .. r*dim+dim), query> for r in [0, rows)
  void (*dot_rows)(const double* matrix, std::size_t rows, std::size_t dim,
                   const double* query, double* out);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled for this target.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// Best table supported by the running CPU (honours AUDITFLOW_ISA).
const KernelTable& active();
// Override the dispatch choice; returns false if the ISA is unavailable.
bool force_isa(Isa isa);
void reset_dispatch();

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
// Cosine similarity clamped to [-1, 1]; 0 when either vector is zero.
double cosine(std::span<const double> a, std::span<const double> b);
void dot_rows(std::span<const double> matrix, std::size_t dim,
              std::span<const double> query, std::span<double> out);

}  // namespace auditflow::kernels
