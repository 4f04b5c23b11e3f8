// Copyright 2026 The LayerLock Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LAYERLOCK_NUMCORE_LINALG_HPP_
#define LAYERLOCK_NUMCORE_LINALG_HPP_

#include <cstddef>
#include <vector>

#include "layerlock/numcore/matrix.hpp"

namespace layerlock {

// a * b.
Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// a^T * b.
Matrix matmul_tn(const Matrix& a, const Matrix& b);

namespace kernel {

// c[m x n] (+)= op(a) * op(b) on raw row-major storage. `a` is m x k (or
// k x m when trans_a), `b` is k x n (or n x k when trans_b). Every output
// entry is accumulated in increasing k order regardless of the transpose
// flags, so results do not depend on how callers batch their rows.
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n, bool trans_a, bool trans_b, bool accumulate);

}  // namespace kernel

// Row-wise softmax with max subtraction. Throws on non-finite input.
Matrix softmax_rows(const Matrix& m);

double frobenius_norm(const Matrix& m);

struct SpectralNorm {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Largest singular value by power iteration on m^T m. The start vector comes
// from a fixed Rng stream, so the result is deterministic. A zero matrix
// returns 0 immediately.
SpectralNorm spectral_norm(const Matrix& m, double tol = 1e-10, int max_iter = 1000);

// All min(rows, cols) singular values, descending, by one-sided Jacobi.
std::vector<double> singular_values(const Matrix& m);

// sigma_2 / sigma_1; 0 for a zero matrix or when min(rows, cols) < 2.
double sigma_ratio(const Matrix& m);

}  // namespace layerlock

#endif  // LAYERLOCK_NUMCORE_LINALG_HPP_
