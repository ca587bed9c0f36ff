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

// Constants shared by the scalar and AVX2 exp evaluations. Both variants must
// use exactly these values in the same order to stay bit-identical.

#ifndef DIFT_SRC_KERNELS_INTERNAL_HPP_
#define DIFT_SRC_KERNELS_INTERNAL_HPP_

namespace dift::simd {

inline constexpr double kExpMin = -708.0;
inline constexpr double kExpMax = 709.0;
inline constexpr double kLog2e = 1.4426950408889634074;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;

// Taylor coefficients 1/k! for exp on [-ln2/2, ln2/2].
inline constexpr int kExpDegree = 12;
inline constexpr double kExpCoeff[kExpDegree + 1] = {
    1.0,
    1.0,
    1.0 / 2.0,
    1.0 / 6.0,
    1.0 / 24.0,
    1.0 / 120.0,
    1.0 / 720.0,
    1.0 / 5040.0,
    1.0 / 40320.0,
    1.0 / 362880.0,
    1.0 / 3628800.0,
    1.0 / 39916800.0,
    1.0 / 479001600.0,
};

}  // namespace dift::simd

#endif  // DIFT_SRC_KERNELS_INTERNAL_HPP_
