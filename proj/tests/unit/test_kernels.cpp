#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "auditflow/kernels/kernels.hpp"

using namespace auditflow::kernels;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

std::vector<const KernelTable*> tables() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (avx2_table()) out.push_back(avx2_table());
  if (neon_table()) out.push_back(neon_table());
  return out;
}

class KernelEquivalence : public ::testing::TestWithParam<std::size_t> {};

}  // namespace

TEST_P(KernelEquivalence, MatchesLongDoubleReference) {
  std::mt19937_64 rng(GetParam());
  const std::size_t n = GetParam();
  const auto a = random_vector(rng, n);
  const auto b = random_vector(rng, n);
  long double ref_dot = 0.0L, ref_ss = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    ref_dot += static_cast<long double>(a[i]) * b[i];
    ref_ss += static_cast<long double>(a[i]) * a[i];
  }
  for (const auto* t : tables()) {
    SCOPED_TRACE(std::string(isa_name(t->isa)));
    EXPECT_NEAR(t->dot(a.data(), b.data(), n), static_cast<double>(ref_dot), 1e-10 * (n + 1));
    EXPECT_NEAR(t->sum_squares(a.data(), n), static_cast<double>(ref_ss), 1e-10 * (n + 1));
  }
}

TEST_P(KernelEquivalence, DotRowsMatchesScalar) {
  std::mt19937_64 rng(GetParam() + 100);
  const std::size_t dim = GetParam() + 1;
  const std::size_t rows = 7;
  const auto m = random_vector(rng, rows * dim);
  const auto q = random_vector(rng, dim);
  std::vector<double> ref(rows), out(rows);
  scalar_table().dot_rows(m.data(), rows, dim, q.data(), ref.data());
  for (const auto* t : tables()) {
    t->dot_rows(m.data(), rows, dim, q.data(), out.data());
    for (std::size_t r = 0; r < rows; ++r) EXPECT_NEAR(out[r], ref[r], 1e-10 * dim);
  }
}

INSTANTIATE_TEST_SUITE_P(Sizes, KernelEquivalence,
                         ::testing::Values(0, 1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 63, 64, 65, 384,
                                           1536, 3072));

TEST(Kernels, CosineIsClampedAndZeroSafe) {
  const std::vector<double> a{1.0, 0.0};
  const std::vector<double> z{0.0, 0.0};
  EXPECT_DOUBLE_EQ(cosine(a, a), 1.0);
  EXPECT_DOUBLE_EQ(cosine(a, z), 0.0);
  const std::vector<double> neg{-2.0, 0.0};
  EXPECT_DOUBLE_EQ(cosine(a, neg), -1.0);
}

TEST(Kernels, ForcingScalarPinsDispatch) {
  ASSERT_TRUE(force_isa(Isa::Scalar));
  EXPECT_EQ(active().isa, Isa::Scalar);
  reset_dispatch();
  if (avx2_table()) {
    EXPECT_NE(active().isa, Isa::Neon);
  }
}
