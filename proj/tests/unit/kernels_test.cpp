// Copyright 2026 The DIFT Game Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dift/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

namespace dift::simd {
namespace {

bool have_avx2() { return detected_isa() == Isa::kAvx2; }

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n,
                                  double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

TEST(ExpPoly, MatchesLibm) {
  for (double x = -700.0; x <= 700.0; x += 0.37) {
    EXPECT_NEAR(exp_poly(x) / std::exp(x), 1.0, 1e-14) << x;
  }
  EXPECT_EQ(exp_poly(0.0), 1.0);
}

TEST(ExpPoly, ClampsExtremes) {
  EXPECT_TRUE(std::isfinite(exp_poly(1e6)));
  EXPECT_GE(exp_poly(-1e6), 0.0);
}

TEST(ScalarKernels, MaskedRowProducts) {
  const std::vector<double> values = {0.5, 0.5, 0.5, 0.2, 0.3, 0.9};
  const std::vector<double> mask = {1, 1, 1, 0, 1, 0};
  std::vector<double> out(2);
  scalar::masked_row_products(values.data(), mask.data(), 2, 3, out.data());
  EXPECT_DOUBLE_EQ(out[0], 0.125);
  EXPECT_DOUBLE_EQ(out[1], 0.3);
}

TEST(ScalarKernels, RowTimesMatrix) {
  const std::vector<double> p = {0.25, 0.75};
  const std::vector<double> q = {0.0, 1.0, 0.5, 0.5};
  std::vector<double> out(2);
  scalar::row_times_matrix(p.data(), q.data(), 2, out.data());
  EXPECT_DOUBLE_EQ(out[0], 0.375);
  EXPECT_DOUBLE_EQ(out[1], 0.625);
}

TEST(ScalarKernels, BinarySwapStepFixedPoint) {
  // Two actions: p1 = D01 / (D01 + D10) with D proportional to exp(eta G).
  double g01 = 3.0, g10 = 1.0, p1 = 0.5;
  const double u0 = 2.0, u1 = 5.0;
  BinarySwapBatch b{&g01, &g10, &p1, &u0, &u1, 1};
  const double gap = scalar::binary_swap_step(b, 0.1);
  EXPECT_DOUBLE_EQ(g01, 8.0);
  EXPECT_DOUBLE_EQ(g10, 3.0);
  const double d01 = std::exp(0.1 * 8.0), d10 = std::exp(0.1 * 3.0);
  EXPECT_NEAR(p1, d01 / (d01 + d10), 1e-15);
  EXPECT_NEAR(gap, std::fabs(p1 - 0.5), 1e-15);
}

TEST(Dispatch, ScalarCanAlwaysBeSelected) {
  const Isa before = active_isa();
  set_active_isa(Isa::kScalar);
  EXPECT_EQ(active_isa(), Isa::kScalar);
  set_active_isa(before);
  EXPECT_STREQ(isa_name(Isa::kScalar), "scalar");
}

#ifdef DIFT_HAVE_AVX2

class Avx2Equivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!have_avx2()) GTEST_SKIP() << "CPU lacks AVX2";
  }
  std::mt19937_64 rng{20260101};
};

TEST_F(Avx2Equivalence, MaskedRowProducts) {
  for (std::size_t cols : {1u, 3u, 4u, 7u, 32u, 33u}) {
    const std::size_t rows = 13;
    auto values = random_vector(rng, rows * cols, 0.0, 1.0);
    std::vector<double> mask(rows * cols);
    for (double& m : mask) m = (rng() & 1) ? 1.0 : 0.0;
    std::vector<double> a(rows), b(rows);
    scalar::masked_row_products(values.data(), mask.data(), rows, cols,
                                a.data());
    avx2::masked_row_products(values.data(), mask.data(), rows, cols,
                              b.data());
    for (std::size_t r = 0; r < rows; ++r) EXPECT_EQ(a[r], b[r]);
  }
}

TEST_F(Avx2Equivalence, BinarySwapStep) {
  for (std::size_t n : {1u, 2u, 4u, 5u, 17u, 64u}) {
    auto g01 = random_vector(rng, n, -1e4, 1e4);
    auto g10 = random_vector(rng, n, -1e4, 1e4);
    auto p1 = random_vector(rng, n, 0.0, 1.0);
    const auto u0 = random_vector(rng, n, -3000, 3000);
    const auto u1 = random_vector(rng, n, -3000, 3000);
    auto g01b = g01, g10b = g10, p1b = p1;
    const double ga =
        scalar::binary_swap_step({g01.data(), g10.data(), p1.data(),
                                  u0.data(), u1.data(), n},
                                 0.1);
    const double gb =
        avx2::binary_swap_step({g01b.data(), g10b.data(), p1b.data(),
                                u0.data(), u1.data(), n},
                               0.1);
    EXPECT_EQ(ga, gb);
    EXPECT_EQ(g01, g01b);
    EXPECT_EQ(g10, g10b);
    EXPECT_EQ(p1, p1b);
  }
}

TEST_F(Avx2Equivalence, RowTimesMatrix) {
  for (std::size_t k : {1u, 2u, 3u, 4u, 8u, 9u}) {
    const auto p = random_vector(rng, k, 0.0, 1.0);
    const auto q = random_vector(rng, k * k, 0.0, 1.0);
    std::vector<double> a(k), b(k);
    scalar::row_times_matrix(p.data(), q.data(), k, a.data());
    avx2::row_times_matrix(p.data(), q.data(), k, b.data());
    EXPECT_EQ(a, b);
  }
}

TEST_F(Avx2Equivalence, Distances) {
  for (std::size_t n : {1u, 4u, 7u, 100u}) {
    const auto a = random_vector(rng, n, -1.0, 1.0);
    const auto b = random_vector(rng, n, -1.0, 1.0);
    EXPECT_EQ(scalar::max_abs_diff(a.data(), b.data(), n),
              avx2::max_abs_diff(a.data(), b.data(), n));
    // Lane-wise reduction may reorder the sum.
    EXPECT_NEAR(scalar::l1_distance(a.data(), b.data(), n),
                avx2::l1_distance(a.data(), b.data(), n), 1e-13 * n);
  }
}

#endif  // DIFT_HAVE_AVX2

}  // namespace
}  // namespace dift::simd
