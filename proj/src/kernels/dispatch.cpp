#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "auditflow/kernels/kernels.hpp"

namespace auditflow::kernels {

#ifndef AUDITFLOW_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif
#ifndef AUDITFLOW_HAVE_NEON
const KernelTable* neon_table() { return nullptr; }
#endif

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* detect() {
  if (const char* env = std::getenv("AUDITFLOW_ISA")) {
    if (std::string(env) == "scalar") return &scalar_table();
  }
  if (avx2_table() != nullptr && cpu_has_avx2()) return avx2_table();
  // NEON is mandatory on aarch64.
  if (neon_table() != nullptr) return neon_table();
  return &scalar_table();
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

const KernelTable& active() {
  const KernelTable* table = g_active.load(std::memory_order_acquire);
  if (table == nullptr) {
    table = detect();
    g_active.store(table, std::memory_order_release);
  }
  return *table;
}

bool force_isa(Isa isa) {
  const KernelTable* table = nullptr;
  switch (isa) {
    case Isa::Scalar: table = &scalar_table(); break;
    case Isa::Avx2: table = cpu_has_avx2() ? avx2_table() : nullptr; break;
    case Isa::Neon: table = neon_table(); break;
  }
  if (table == nullptr) return false;
  g_active.store(table, std::memory_order_release);
  return true;
}

void reset_dispatch() { g_active.store(nullptr, std::memory_order_release); }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

double norm(std::span<const double> a) {
  return std::sqrt(active().sum_squares(a.data(), a.size()));
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: length mismatch");
  const auto& k = active();
  const double na = std::sqrt(k.sum_squares(a.data(), a.size()));
  const double nb = std::sqrt(k.sum_squares(b.data(), b.size()));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(k.dot(a.data(), b.data(), a.size()) / (na * nb), -1.0, 1.0);
}

void dot_rows(std::span<const double> matrix, std::size_t dim,
              std::span<const double> query, std::span<double> out) {
  if (query.size() != dim) throw std::invalid_argument("dot_rows: query dimension");
  if (dim == 0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const std::size_t rows = matrix.size() / dim;
  if (rows * dim != matrix.size() || out.size() < rows) {
    throw std::invalid_argument("dot_rows: matrix shape");
  }
  active().dot_rows(matrix.data(), rows, dim, query.data(), out.data());
}

}  // namespace auditflow::kernels
