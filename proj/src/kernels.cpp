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

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>

#include "dift/error.hpp"
#include "kernels_internal.hpp"

namespace dift::simd {

double exp_poly(double x) {
  x = std::min(std::max(x, kExpMin), kExpMax);
  const double n = std::nearbyint(x * kLog2e);
  double r = x - n * kLn2Hi;
  r = r - n * kLn2Lo;
  double p = kExpCoeff[kExpDegree];
  for (int k = kExpDegree - 1; k >= 0; --k) p = p * r + kExpCoeff[k];
  const auto bits = static_cast<std::uint64_t>(static_cast<std::int64_t>(n) + 1023)
                    << 52;
  return p * std::bit_cast<double>(bits);
}

namespace scalar {

void masked_row_products(const double* values, const double* mask,
                         std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    double prod = 1.0;
    const std::size_t base = r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      if (mask[base + c] != 0.0) prod *= values[base + c];
    }
    out[r] = prod;
  }
}

double binary_swap_step(const BinarySwapBatch& b, double eta) {
  double gap = 0.0;
  for (std::size_t i = 0; i < b.n; ++i) {
    const double old = b.p1[i];
    // With two actions the swapped distributions are degenerate, so the
    // expected swap utilities reduce to the realized utility of the target.
    b.g01[i] += b.u1[i];
    b.g10[i] += b.u0[i];
    const double e = exp_poly(eta * (b.g10[i] - b.g01[i]));
    const double next = 1.0 / (1.0 + e);
    gap = std::max(gap, std::fabs(next - old));
    b.p1[i] = next;
  }
  return gap;
}

void row_times_matrix(const double* p, const double* q, std::size_t k,
                      double* out) {
  for (std::size_t s = 0; s < k; ++s) out[s] = 0.0;
  for (std::size_t r = 0; r < k; ++r) {
    const double pr = p[r];
    const double* row = q + r * k;
    for (std::size_t s = 0; s < k; ++s) out[s] = out[s] + pr * row[s];
  }
}

double l1_distance(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::fabs(a[i] - b[i]);
  return sum;
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace scalar

namespace {

Isa probe_cpu() {
#if defined(DIFT_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) return Isa::kAvx2;
#endif
  return Isa::kScalar;
}

Isa initial_isa() {
  const char* env = std::getenv("DIFT_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return Isa::kScalar;
  return probe_cpu();
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

bool use_avx2() {
#if defined(DIFT_HAVE_AVX2)
  return active().load(std::memory_order_relaxed) == Isa::kAvx2;
#else
  return false;
#endif
}

}  // namespace

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

Isa detected_isa() {
  static const Isa isa = probe_cpu();
  return isa;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (isa == Isa::kAvx2 && detected_isa() != Isa::kAvx2) {
    throw Error("AVX2 kernels requested but the CPU does not support AVX2");
  }
  active().store(isa, std::memory_order_relaxed);
}

#if defined(DIFT_HAVE_AVX2)
#define DIFT_DISPATCH(fn, ...) \
  (use_avx2() ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define DIFT_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

void masked_row_products(const double* values, const double* mask,
                         std::size_t rows, std::size_t cols, double* out) {
  DIFT_DISPATCH(masked_row_products, values, mask, rows, cols, out);
}

double binary_swap_step(const BinarySwapBatch& batch, double eta) {
  return DIFT_DISPATCH(binary_swap_step, batch, eta);
}

void row_times_matrix(const double* p, const double* q, std::size_t k,
                      double* out) {
  DIFT_DISPATCH(row_times_matrix, p, q, k, out);
}

double l1_distance(const double* a, const double* b, std::size_t n) {
  return DIFT_DISPATCH(l1_distance, a, b, n);
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  return DIFT_DISPATCH(max_abs_diff, a, b, n);
}

#undef DIFT_DISPATCH

}  // namespace dift::simd
