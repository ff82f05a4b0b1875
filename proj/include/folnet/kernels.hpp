// Copyright 2026 The FOLNet Authors.
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

#pragma once

// Raw numeric kernels behind the differentiable ops. Every kernel has an
// optimized version in folnet::kernels (OpenMP loops, BLAS for larger GEMMs)
// and a plain serial version in folnet::kernels::serial; tests check they
// agree and bench/ times both.

#include <cstddef>
#include <span>

namespace folnet::kernels {

/// Describes a batch of equally-shaped GEMMs C[i] (+)= op(A[i]) * op(B[i])
/// addressed by element offsets into flat buffers. op(X) is X or X^T.
struct GemmBatch {
  std::size_t m = 0, k = 0, n = 0;
  bool trans_a = false;  // A stored as [k, m] instead of [m, k]
  bool trans_b = false;  // B stored as [n, k] instead of [k, n]
  std::span<const std::size_t> a_off, b_off, c_off;
  bool accumulate = false;
  bool c_disjoint = true;  // false when several batch entries write the same C
};

void gemm_batched(const double* a, const double* b, double* c, const GemmBatch& g);

/// y[r, :] = softmax(x[r, :]) over rows of length n, max-stabilized.
void softmax_rows(const double* x, double* y, std::size_t rows, std::size_t n);

/// y = (x - mean) / sqrt(var + eps) * gain + bias per row; writes the
/// normalized values and inverse std for the backward pass.
void layer_norm_rows(const double* x, const double* gain, const double* bias,
                     double* y, double* xhat, double* inv_std,
                     std::size_t rows, std::size_t n, double eps);

/// Generic axis permutation: out axis i is input axis perm[i].
void permute(const double* x, double* y, std::span<const std::size_t> shape,
             std::span<const std::size_t> perm);

namespace serial {

void gemm_batched(const double* a, const double* b, double* c, const GemmBatch& g);
void softmax_rows(const double* x, double* y, std::size_t rows, std::size_t n);
void layer_norm_rows(const double* x, const double* gain, const double* bias,
                     double* y, double* xhat, double* inv_std,
                     std::size_t rows, std::size_t n, double eps);
void permute(const double* x, double* y, std::span<const std::size_t> shape,
             std::span<const std::size_t> perm);

}  // namespace serial
}  // namespace folnet::kernels
