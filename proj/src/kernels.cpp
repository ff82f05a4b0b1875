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

#include "folnet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <cblas.h>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace folnet::kernels {
namespace {

// Products at least this large (m * n * k) go to BLAS one at a time.
constexpr std::size_t kBlasMinWork = 4096;

inline double dot(const double* x, const double* y, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    s0 += x[j] * y[j];
    s1 += x[j + 1] * y[j + 1];
    s2 += x[j + 2] * y[j + 2];
    s3 += x[j + 3] * y[j + 3];
  }
  for (; j < n; ++j) s0 += x[j] * y[j];
  return (s0 + s1) + (s2 + s3);
}

inline void axpy(double a, const double* x, double* y, std::size_t n) {
#pragma omp simd
  for (std::size_t j = 0; j < n; ++j) y[j] += a * x[j];
}

// Single GEMM. Each layout gets a loop order whose inner loop is contiguous.
inline void gemm_one(const double* a, const double* b, double* c, std::size_t m,
                     std::size_t k, std::size_t n, bool ta, bool tb, bool acc) {
  if (!acc) std::fill(c, c + m * n, 0.0);
  if (!ta && !tb) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const double av = a[i * k + p];
        if (av != 0.0) axpy(av, b + p * n, c + i * n, n);
      }
  } else if (!ta && tb) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot(a + i * k, b + j * k, k);
  } else if (ta && !tb) {
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t i = 0; i < m; ++i) {
        const double av = a[p * m + i];
        if (av != 0.0) axpy(av, b + p * n, c + i * n, n);
      }
  } else {
    std::vector<double> bt(k * n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t i = 0; i < m; ++i) {
        const double av = a[p * m + i];
        if (av != 0.0) axpy(av, bt.data() + p * n, c + i * n, n);
      }
  }
}

inline void softmax_row(const double* x, double* y, std::size_t n) {
  double mx = x[0];
  for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    y[j] = std::exp(x[j] - mx);
    s += y[j];
  }
  const double inv = 1.0 / s;
  for (std::size_t j = 0; j < n; ++j) y[j] *= inv;
}

inline void layer_norm_row(const double* x, const double* gain, const double* bias,
                           double* y, double* xhat, double* inv_std, std::size_t n,
                           double eps) {
  double mean = 0.0;
  for (std::size_t j = 0; j < n; ++j) mean += x[j];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = x[j] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);
  const double is = 1.0 / std::sqrt(var + eps);
  *inv_std = is;
  for (std::size_t j = 0; j < n; ++j) {
    xhat[j] = (x[j] - mean) * is;
    y[j] = xhat[j] * gain[j] + bias[j];
  }
}

struct PermutePlan {
  std::vector<std::size_t> out_shape;
  std::vector<std::size_t> in_stride;  // input stride of each output axis
  std::size_t total = 1;
};

PermutePlan plan_permute(std::span<const std::size_t> shape,
                         std::span<const std::size_t> perm) {
  const std::size_t nd = shape.size();
  std::vector<std::size_t> stride(nd, 1);
  for (std::size_t i = nd; i-- > 1;) stride[i - 1] = stride[i] * shape[i];
  PermutePlan p;
  p.out_shape.resize(nd);
  p.in_stride.resize(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    p.out_shape[i] = shape[perm[i]];
    p.in_stride[i] = stride[perm[i]];
    p.total *= p.out_shape[i];
  }
  return p;
}

// Copies output elements [begin, end) of a permutation.
void permute_range(const double* x, double* y, const PermutePlan& p,
                   std::size_t begin, std::size_t end) {
  const std::size_t nd = p.out_shape.size();
  if (nd == 0) {
    if (begin < end) y[0] = x[0];
    return;
  }
  std::vector<std::size_t> idx(nd, 0);
  std::size_t rem = begin;
  std::size_t src = 0;
  for (std::size_t i = nd; i-- > 0;) {
    idx[i] = rem % p.out_shape[i];
    rem /= p.out_shape[i];
    src += idx[i] * p.in_stride[i];
  }
  const std::size_t last = nd - 1;
  const std::size_t inner = p.out_shape[last];
  const std::size_t inner_stride = p.in_stride[last];
  std::size_t o = begin;
  while (o < end) {
    // Run along the innermost axis as far as possible.
    const std::size_t run = std::min(inner - idx[last], end - o);
    for (std::size_t r = 0; r < run; ++r) y[o + r] = x[src + r * inner_stride];
    o += run;
    src += run * inner_stride;
    idx[last] += run;
    for (std::size_t i = last; i > 0 && idx[i] == p.out_shape[i]; --i) {
      src -= idx[i] * p.in_stride[i];
      idx[i] = 0;
      ++idx[i - 1];
      src += p.in_stride[i - 1];
    }
  }
}

}  // namespace

void gemm_batched(const double* a, const double* b, double* c, const GemmBatch& g) {
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(g.a_off.size());
  if (g.m * g.n * g.k >= kBlasMinWork) {
    const int m = static_cast<int>(g.m), n = static_cast<int>(g.n), k = static_cast<int>(g.k);
    const int lda = g.trans_a ? m : k, ldb = g.trans_b ? k : n;
    for (std::size_t i = 0; i < g.a_off.size(); ++i) {
      cblas_dgemm(CblasRowMajor, g.trans_a ? CblasTrans : CblasNoTrans,
                  g.trans_b ? CblasTrans : CblasNoTrans, m, n, k, 1.0, a + g.a_off[i], lda,
                  b + g.b_off[i], ldb, g.accumulate ? 1.0 : 0.0, c + g.c_off[i], n);
    }
    return;
  }
  if (!g.c_disjoint) {
    serial::gemm_batched(a, b, c, g);
    return;
  }
#pragma omp parallel for schedule(static) if (count > 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    gemm_one(a + g.a_off[i], b + g.b_off[i], c + g.c_off[i], g.m, g.k, g.n,
             g.trans_a, g.trans_b, g.accumulate);
  }
}

void softmax_rows(const double* x, double* y, std::size_t rows, std::size_t n) {
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * n > 4096)
  for (std::ptrdiff_t i = 0; i < r; ++i) softmax_row(x + i * n, y + i * n, n);
}

void layer_norm_rows(const double* x, const double* gain, const double* bias,
                     double* y, double* xhat, double* inv_std, std::size_t rows,
                     std::size_t n, double eps) {
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * n > 4096)
  for (std::ptrdiff_t i = 0; i < r; ++i) {
    layer_norm_row(x + i * n, gain, bias, y + i * n, xhat + i * n, inv_std + i, n,
                   eps);
  }
}

void permute(const double* x, double* y, std::span<const std::size_t> shape,
             std::span<const std::size_t> perm) {
  const PermutePlan p = plan_permute(shape, perm);
#pragma omp parallel if (p.total > 16384)
  {
#ifdef _OPENMP
    const std::size_t nt = static_cast<std::size_t>(omp_get_num_threads());
    const std::size_t tid = static_cast<std::size_t>(omp_get_thread_num());
#else
    const std::size_t nt = 1, tid = 0;
#endif
    const std::size_t chunk = (p.total + nt - 1) / nt;
    const std::size_t begin = std::min(p.total, tid * chunk);
    const std::size_t end = std::min(p.total, begin + chunk);
    permute_range(x, y, p, begin, end);
  }
}

namespace serial {

void gemm_batched(const double* a, const double* b, double* c, const GemmBatch& g) {
  for (std::size_t i = 0; i < g.a_off.size(); ++i) {
    // Plain triple loop; the reference the parallel path is checked against.
    double* cc = c + g.c_off[i];
    const double* aa = a + g.a_off[i];
    const double* bb = b + g.b_off[i];
    for (std::size_t r = 0; r < g.m; ++r) {
      for (std::size_t col = 0; col < g.n; ++col) {
        double s = 0.0;
        for (std::size_t p = 0; p < g.k; ++p) {
          const double av = g.trans_a ? aa[p * g.m + r] : aa[r * g.k + p];
          const double bv = g.trans_b ? bb[col * g.k + p] : bb[p * g.n + col];
          s += av * bv;
        }
        if (g.accumulate) {
          cc[r * g.n + col] += s;
        } else {
          cc[r * g.n + col] = s;
        }
      }
    }
  }
}

void softmax_rows(const double* x, double* y, std::size_t rows, std::size_t n) {
  for (std::size_t i = 0; i < rows; ++i) softmax_row(x + i * n, y + i * n, n);
}

void layer_norm_rows(const double* x, const double* gain, const double* bias,
                     double* y, double* xhat, double* inv_std, std::size_t rows,
                     std::size_t n, double eps) {
  for (std::size_t i = 0; i < rows; ++i) {
    layer_norm_row(x + i * n, gain, bias, y + i * n, xhat + i * n, inv_std + i, n,
                   eps);
  }
}

void permute(const double* x, double* y, std::span<const std::size_t> shape,
             std::span<const std::size_t> perm) {
  const std::size_t nd = shape.size();
  std::vector<std::size_t> stride(nd, 1);
  for (std::size_t i = nd; i-- > 1;) stride[i - 1] = stride[i] * shape[i];
  std::size_t total = 1;
  for (auto d : shape) total *= d;
  std::vector<std::size_t> idx(nd, 0);
  for (std::size_t o = 0; o < total; ++o) {
    std::size_t rem = o;
    std::size_t src = 0;
    for (std::size_t i = nd; i-- > 0;) {
      const std::size_t extent = shape[perm[i]];
      src += (rem % extent) * stride[perm[i]];
      rem /= extent;
    }
    y[o] = x[src];
  }
}

}  // namespace serial
}  // namespace folnet::kernels
