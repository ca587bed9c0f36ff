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

// Numeric inner loops shared by the evaluators and the learner. Every kernel
// has a scalar reference in `scalar::` and, on x86-64, an AVX2 variant in
// `avx2::`. The free functions in `dift::simd` dispatch at runtime.
//
// Unless noted otherwise the AVX2 variants perform the same floating-point
// operations in the same order as the scalar reference, so results are
// bit-identical. l1_distance is the exception: it reduces in four lanes.

#ifndef DIFT_KERNELS_HPP_
#define DIFT_KERNELS_HPP_

#include <cstddef>

namespace dift::simd {

enum class Isa { kScalar, kAvx2 };

const char* isa_name(Isa isa);

// Best instruction set supported by the running CPU.
Isa detected_isa();

// Instruction set used by dispatch. Starts at detected_isa(), or kScalar when
// the environment variable DIFT_SIMD is set to "scalar".
Isa active_isa();

// Throws dift::Error if `isa` is not supported by this CPU.
void set_active_isa(Isa isa);

// Operands of one learner step for a batch of two-action players. On return
// p1 holds the new probabilities of action 1 and the swap accumulators hold
// the history including this step.
struct BinarySwapBatch {
  double* g01;        // cumulative utility of swapping action 0 -> 1
  double* g10;        // cumulative utility of swapping action 1 -> 0
  double* p1;         // probability of action 1
  const double* u0;   // realized utility of action 0 this round
  const double* u1;   // realized utility of action 1 this round
  std::size_t n;
};

// exp(x) evaluated with the polynomial used by the vector kernels; x is
// clamped to [-708, 709]. Relative error is a few ulp.
double exp_poly(double x);

// out[r] = prod_{c : mask[r*cols+c] != 0} values[r*cols+c]. Mask entries are
// 0.0 or 1.0.
void masked_row_products(const double* values, const double* mask,
                         std::size_t rows, std::size_t cols, double* out);

// Adds this round's utilities to the swap accumulators, then sets p1 to the
// fixed point of the exponentially weighted swaps.
// Returns max_i |p1_new[i] - p1_old[i]|.
double binary_swap_step(const BinarySwapBatch& batch, double eta);

// out[s] = sum_r p[r] * q[r*k + s] for a k x k row-major q.
void row_times_matrix(const double* p, const double* q, std::size_t k,
                      double* out);

double l1_distance(const double* a, const double* b, std::size_t n);
double max_abs_diff(const double* a, const double* b, std::size_t n);

namespace scalar {
void masked_row_products(const double* values, const double* mask,
                         std::size_t rows, std::size_t cols, double* out);
double binary_swap_step(const BinarySwapBatch& batch, double eta);
void row_times_matrix(const double* p, const double* q, std::size_t k,
                      double* out);
double l1_distance(const double* a, const double* b, std::size_t n);
double max_abs_diff(const double* a, const double* b, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__)
#define DIFT_HAVE_AVX2 1
namespace avx2 {
void masked_row_products(const double* values, const double* mask,
                         std::size_t rows, std::size_t cols, double* out);
double binary_swap_step(const BinarySwapBatch& batch, double eta);
void row_times_matrix(const double* p, const double* q, std::size_t k,
                      double* out);
double l1_distance(const double* a, const double* b, std::size_t n);
double max_abs_diff(const double* a, const double* b, std::size_t n);
}  // namespace avx2
#endif

}  // namespace dift::simd

#endif  // DIFT_KERNELS_HPP_
