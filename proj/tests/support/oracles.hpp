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

#ifndef LAYERLOCK_TESTS_SUPPORT_ORACLES_HPP_
#define LAYERLOCK_TESTS_SUPPORT_ORACLES_HPP_

// Independent reference implementations used only by tests. Nothing here
// calls into the library's linear algebra.

#include <cstdint>
#include <functional>
#include <vector>

#include "layerlock/numcore/matrix.hpp"

namespace oracle {

using layerlock::Matrix;

// Textbook triple loop.
Matrix naive_matmul(const Matrix& a, const Matrix& b);

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
std::vector<double> jacobi_eigenvalues(Matrix a, double tol = 1e-14, int max_sweeps = 100);

// Singular values via Jacobi on A^T A (or A A^T, whichever is smaller).
std::vector<double> singular_values(const Matrix& a);

// exp(s_ij - max_j s_ij) / sum, row by row.
Matrix softmax_rows(const Matrix& s);

// X + softmax(X Q (X K)^T / (sqrt(d_q) ||X||_F^2)) X, every loop spelled out.
Matrix phi(const Matrix& x, const Matrix& key, const Matrix& query);

// Central differences of f at x, one coordinate at a time.
Matrix fd_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                   double h = 1e-6);

// ||a - b|| / max(||a||, ||b||, floor).
double rel_err(const Matrix& a, const Matrix& b, double floor = 1e-12);
double rel_err(double a, double b, double floor = 1e-12);

// Mean token cross-entropy of (rows x V) logits over labelled rows (-1 skipped).
double cross_entropy(const Matrix& logits, const std::vector<std::int64_t>& targets);

}  // namespace oracle

#endif  // LAYERLOCK_TESTS_SUPPORT_ORACLES_HPP_
