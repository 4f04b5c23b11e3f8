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

#include "layerlock/numcore/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "layerlock/numcore/rng.hpp"

namespace layerlock {

namespace kernel {
namespace {

// c[m x n] += a[m x k] * b[k x n], all row-major and contiguous. Four output
// rows share each pass over a row of b; every entry still sums over p in
// increasing order.
void gemm_nn(const double* __restrict a, const double* __restrict b, double* __restrict c,
             std::size_t m, std::size_t k, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* __restrict c0 = c + i * n;
    double* __restrict c1 = c0 + n;
    double* __restrict c2 = c1 + n;
    double* __restrict c3 = c2 + n;
    const double* a0 = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double x0 = a0[p], x1 = a0[k + p], x2 = a0[2 * k + p], x3 = a0[3 * k + p];
      const double* __restrict brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double bj = brow[j];
        c0[j] += x0 * bj;
        c1[j] += x1 * bj;
        c2[j] += x2 * bj;
        c3[j] += x3 * bj;
      }
    }
  }
  for (; i < m; ++i) {
    double* __restrict crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = arow[p];
      const double* __restrict brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

// c[m x n] += a^T * b with a stored k x m.
void gemm_tn(const double* __restrict a, const double* __restrict b, double* __restrict c,
             std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* __restrict brow = b + p * n;
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
      const double x0 = arow[i], x1 = arow[i + 1], x2 = arow[i + 2], x3 = arow[i + 3];
      double* __restrict c0 = c + i * n;
      double* __restrict c1 = c0 + n;
      double* __restrict c2 = c1 + n;
      double* __restrict c3 = c2 + n;
      for (std::size_t j = 0; j < n; ++j) {
        const double bj = brow[j];
        c0[j] += x0 * bj;
        c1[j] += x1 * bj;
        c2[j] += x2 * bj;
        c3[j] += x3 * bj;
      }
    }
    for (; i < m; ++i) {
      const double api = arow[i];
      double* __restrict crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += api * brow[j];
    }
  }
}

std::vector<double> transposed(const double* x, std::size_t rows, std::size_t cols) {
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = x[r * cols + c];
  }
  return out;
}

}  // namespace

void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n, bool trans_a, bool trans_b, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, 0.0);
  if (m == 0 || n == 0 || k == 0) return;
  std::vector<double> bt;
  if (trans_b) {
    bt = transposed(b, n, k);
    b = bt.data();
  }
  if (trans_a) {
    gemm_tn(a, b, c, m, k, n);
  } else {
    gemm_nn(a, b, c, m, k, n);
  }
}

}  // namespace kernel

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: shape " + a.shape_string() + " * " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  kernel::gemm(a.data().data(), b.data().data(), out.data().data(), a.rows(), a.cols(),
               b.cols(), false, false, false);
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul_nt: shape " + a.shape_string() + " * (" +
                                b.shape_string() + ")^T");
  }
  Matrix out(a.rows(), b.rows());
  kernel::gemm(a.data().data(), b.data().data(), out.data().data(), a.rows(), a.cols(),
               b.rows(), false, true, false);
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("matmul_tn: shape (" + a.shape_string() + ")^T * " +
                                b.shape_string());
  }
  Matrix out(a.cols(), b.cols());
  kernel::gemm(a.data().data(), b.data().data(), out.data().data(), a.cols(), a.rows(),
               b.cols(), true, false, false);
  return out;
}

Matrix softmax_rows(const Matrix& m) {
  if (!m.all_finite()) throw std::invalid_argument("softmax_rows: non-finite input");
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto in = m.row(r);
    auto o = out.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      o[c] = std::exp(in[c] - mx);
      total += o[c];
    }
    for (double& x : o) x /= total;
  }
  return out;
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double x : m.data()) s += x * x;
  return std::sqrt(s);
}

SpectralNorm spectral_norm(const Matrix& m, double tol, int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("spectral_norm: tol must be positive");
  SpectralNorm result;
  if (frobenius_norm(m) == 0.0) {
    result.converged = true;
    return result;
  }
  constexpr std::uint64_t kPowerIterationSeed = 0x5eed5eedULL;
  Rng rng(kPowerIterationSeed);
  Matrix v(m.cols(), 1);
  for (double& x : v.data()) x = rng.uniform(-1.0, 1.0);
  v *= 1.0 / frobenius_norm(v);

  double estimate = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Matrix mv = matmul(m, v);
    const double next = frobenius_norm(mv);
    Matrix w = matmul_tn(m, mv);
    const double wn = frobenius_norm(w);
    result.iterations = it;
    if (wn == 0.0) {
      // Start vector landed in the null space; value is exact for this v.
      estimate = next;
      result.converged = true;
      break;
    }
    v = w * (1.0 / wn);
    if (std::fabs(next - estimate) <= tol * next) {
      estimate = next;
      result.converged = true;
      break;
    }
    estimate = next;
  }
  result.value = estimate;
  return result;
}

std::vector<double> singular_values(const Matrix& m) {
  if (!m.all_finite()) throw std::invalid_argument("singular_values: non-finite input");
  // One-sided Jacobi on the columns of a tall matrix.
  Matrix a = m.rows() >= m.cols() ? m : transpose(m);
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  constexpr double kEps = 1e-15;
  constexpr int kMaxSweeps = 80;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
          const double x = a(r, p);
          const double y = a(r, q);
          alpha += x * x;
          beta += y * y;
          gamma += x * y;
        }
        if (gamma == 0.0 || std::fabs(gamma) <= kEps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < rows; ++r) {
          const double x = a(r, p);
          const double y = a(r, q);
          a(r, p) = c * x - s * y;
          a(r, q) = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += a(r, c) * a(r, c);
    sigma[c] = std::sqrt(s);
  }
  std::sort(sigma.begin(), sigma.end(), std::greater<>());
  return sigma;
}

double sigma_ratio(const Matrix& m) {
  const auto sigma = singular_values(m);
  if (sigma.size() < 2 || sigma[0] == 0.0) return 0.0;
  return sigma[1] / sigma[0];
}

}  // namespace layerlock
