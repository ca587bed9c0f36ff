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

// AVX2 variants of the kernels in dift/kernels.hpp. This file is compiled with
// -mavx2 and only called after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "dift/kernels.hpp"
#include "kernels_internal.hpp"

namespace dift::simd::avx2 {
namespace {

__m256d exp4(__m256d x) {
  x = _mm256_min_pd(_mm256_max_pd(x, _mm256_set1_pd(kExpMin)),
                    _mm256_set1_pd(kExpMax));
  const __m256d n =
      _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kLog2e)),
                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_sub_pd(x, _mm256_mul_pd(n, _mm256_set1_pd(kLn2Hi)));
  r = _mm256_sub_pd(r, _mm256_mul_pd(n, _mm256_set1_pd(kLn2Lo)));
  __m256d p = _mm256_set1_pd(kExpCoeff[kExpDegree]);
  for (int k = kExpDegree - 1; k >= 0; --k) {
    p = _mm256_add_pd(_mm256_mul_pd(p, r), _mm256_set1_pd(kExpCoeff[k]));
  }
  // n + 1.5 * 2^52 leaves n in the low mantissa bits; subtracting the magic
  // pattern as integers recovers n as int64.
  const __m256d magic = _mm256_set1_pd(6755399441055744.0);
  const __m256i ni = _mm256_sub_epi64(
      _mm256_castpd_si256(_mm256_add_pd(n, magic)), _mm256_castpd_si256(magic));
  const __m256i bits =
      _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
}

__m256d abs4(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

double hmax(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
}

}  // namespace

void masked_row_products(const double* values, const double* mask,
                         std::size_t rows, std::size_t cols, double* out) {
  const auto stride = static_cast<int>(cols);
  const __m128i offsets = _mm_set_epi32(3 * stride, 2 * stride, stride, 0);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* vb = values + r * cols;
    const double* mb = mask + r * cols;
    __m256d prod = one;
    for (std::size_t c = 0; c < cols; ++c) {
      const __m256d v = _mm256_i32gather_pd(vb + c, offsets, 8);
      const __m256d m = _mm256_i32gather_pd(mb + c, offsets, 8);
      const __m256d on = _mm256_cmp_pd(m, zero, _CMP_NEQ_UQ);
      prod = _mm256_mul_pd(prod, _mm256_blendv_pd(one, v, on));
    }
    _mm256_storeu_pd(out + r, prod);
  }
  if (r < rows) {
    scalar::masked_row_products(values + r * cols, mask + r * cols, rows - r,
                                cols, out + r);
  }
}

double binary_swap_step(const BinarySwapBatch& b, double eta) {
  const __m256d veta = _mm256_set1_pd(eta);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d gap = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= b.n; i += 4) {
    const __m256d old = _mm256_loadu_pd(b.p1 + i);
    const __m256d g01 =
        _mm256_add_pd(_mm256_loadu_pd(b.g01 + i), _mm256_loadu_pd(b.u1 + i));
    const __m256d g10 =
        _mm256_add_pd(_mm256_loadu_pd(b.g10 + i), _mm256_loadu_pd(b.u0 + i));
    _mm256_storeu_pd(b.g01 + i, g01);
    _mm256_storeu_pd(b.g10 + i, g10);
    const __m256d e = exp4(_mm256_mul_pd(veta, _mm256_sub_pd(g10, g01)));
    const __m256d next = _mm256_div_pd(one, _mm256_add_pd(one, e));
    gap = _mm256_max_pd(gap, abs4(_mm256_sub_pd(next, old)));
    _mm256_storeu_pd(b.p1 + i, next);
  }
  double result = hmax(gap);
  if (i < b.n) {
    const BinarySwapBatch tail{b.g01 + i, b.g10 + i, b.p1 + i,
                               b.u0 + i,  b.u1 + i,  b.n - i};
    result = std::max(result, scalar::binary_swap_step(tail, eta));
  }
  return result;
}

void row_times_matrix(const double* p, const double* q, std::size_t k,
                      double* out) {
  std::size_t s = 0;
  for (; s + 4 <= k; s += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t r = 0; r < k; ++r) {
      acc = _mm256_add_pd(
          acc, _mm256_mul_pd(_mm256_set1_pd(p[r]), _mm256_loadu_pd(q + r * k + s)));
    }
    _mm256_storeu_pd(out + s, acc);
  }
  for (; s < k; ++s) {
    double acc = 0.0;
    for (std::size_t r = 0; r < k; ++r) acc = acc + p[r] * q[r * k + s];
    out[s] = acc;
  }
}

double l1_distance(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(
        acc, abs4(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i))));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) sum += std::fabs(a[i] - b[i]);
  return sum;
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_max_pd(
        acc, abs4(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i))));
  }
  double m = hmax(acc);
  for (; i < n; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace dift::simd::avx2
