#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "resae/simd/kernels.hpp"

namespace {

using resae::simd::KernelTable;

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double scale) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12 * scale) << "index " << i;
}

#if defined(RESAE_HAVE_AVX2)

class KernelEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!resae::simd::cpu_supports_avx2()) GTEST_SKIP() << "CPU lacks AVX2/FMA";
  }
  const KernelTable& ref = resae::simd::scalar_kernels();
  const KernelTable& fast = resae::simd::avx2_kernels();
};

TEST_F(KernelEquivalence, DotAndAxpyAcrossTailLengths) {
  std::mt19937_64 rng(1);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 17u, 33u, 200u, 1001u}) {
    auto a = random_vec(n, rng), b = random_vec(n, rng);
    EXPECT_NEAR(ref.dot(a.data(), b.data(), n), fast.dot(a.data(), b.data(), n), 1e-12 * (n + 1));
    auto y1 = random_vec(n, rng);
    auto y2 = y1;
    ref.axpy(0.37, a.data(), y1.data(), n);
    fast.axpy(0.37, a.data(), y2.data(), n);
    expect_close(y1, y2, 1.0);
  }
}

TEST_F(KernelEquivalence, GemmVariants) {
  std::mt19937_64 rng(2);
  const std::size_t shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {8, 8, 8}, {13, 17, 9}, {32, 50, 160}, {2, 33, 5}};
  for (const auto& s : shapes) {
    const std::size_t m = s[0], n = s[1], k = s[2];
    auto a = random_vec(m * k, rng), b = random_vec(k * n, rng), c0 = random_vec(m * n, rng);
    auto c1 = c0, c2 = c0;
    ref.gemm_nn(m, n, k, a.data(), b.data(), c1.data());
    fast.gemm_nn(m, n, k, a.data(), b.data(), c2.data());
    expect_close(c1, c2, static_cast<double>(k));

    auto bt = random_vec(n * k, rng);
    c1 = c0, c2 = c0;
    ref.gemm_nt(m, n, k, a.data(), bt.data(), c1.data());
    fast.gemm_nt(m, n, k, a.data(), bt.data(), c2.data());
    expect_close(c1, c2, static_cast<double>(k));

    auto at = random_vec(k * m, rng);
    c1 = c0, c2 = c0;
    ref.gemm_tn(m, n, k, at.data(), b.data(), c1.data());
    fast.gemm_tn(m, n, k, at.data(), b.data(), c2.data());
    expect_close(c1, c2, static_cast<double>(k));
  }
}

#endif

TEST(KernelReference, GemmMatchesNaiveTripleLoop) {
  std::mt19937_64 rng(3);
  const std::size_t m = 4, n = 3, k = 5;
  auto a = random_vec(m * k, rng), b = random_vec(k * n, rng);
  std::vector<double> c(m * n, 0.0), expect(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) expect[i * n + j] += a[i * k + p] * b[p * n + j];
  resae::simd::scalar_kernels().gemm_nn(m, n, k, a.data(), b.data(), c.data());
  expect_close(c, expect, 1.0);
}

TEST(KernelDispatch, SelectScalarAndRestore) {
  const auto before = resae::simd::active_backend();
  resae::simd::select(resae::simd::Backend::kScalar);
  EXPECT_EQ(resae::simd::active_backend(), resae::simd::Backend::kScalar);
  EXPECT_EQ(resae::simd::backend_name(resae::simd::Backend::kScalar), "scalar");
  resae::simd::select(before);
  EXPECT_EQ(resae::simd::active_backend(), before);
}

}  // namespace
