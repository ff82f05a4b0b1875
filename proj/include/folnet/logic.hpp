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

// The seven neural logic operators. Kernels arrive already activated
// (softmax or identity) and premises already projected; an optional 0/1
// mask of shape [batch or 1, T, T] zeroes the masked kernel/premise entries.
//
//   op   kernel          premise         output          contraction
//   j    [b,H,X,A]       [b,A,H,S]       [b,X,H,S]       sum_a K[h,x,a] v[a,h,s]
//   c    [b,A,H,S]       [b,H,X,A]       [b,X,H,S]       sum_a K[a,h,s] v[h,x,a]
//   m    [b,H,X,A]       [b,S,X,A]       [b,X,H,S]       sum_a K[h,x,a] v[s,x,a]
//   a    [b,X,H,W]       [b,Y,H,W]       [b,H,X,Y]       sum_w K[x,h,w] v[y,h,w] / sqrt(W)
//   p    [b,X,H,W]       [b,W,X,Y]       [b,H,X,Y]       sum_w K[x,h,w] v[w,x,y]
//   t    [b,H,X,A]       [b,H,A,Y]       [b,H,X,Y]       sum_a K[h,x,a] v[h,a,y]
//   b    bool_ffn, pointwise per token or per token pair

#include <string>

#include "folnet/tensor.hpp"

namespace folnet::logic {

Tensor op_join(const Tensor& kernel, const Tensor& premise, const Tensor& mask = {});
Tensor op_assoc(const Tensor& kernel, const Tensor& premise);
Tensor op_cjoin(const Tensor& kernel, const Tensor& premise, const Tensor& mask = {});
Tensor op_mu(const Tensor& kernel, const Tensor& premise, const Tensor& mask = {});
Tensor op_prod(const Tensor& kernel, const Tensor& premise, const Tensor& mask = {});
Tensor op_trans(const Tensor& kernel, const Tensor& premise, const Tensor& mask = {});

/// w2 * gelu(w1 * x + b1) + b2 over the last axis.
Tensor bool_ffn(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
                const Tensor& b2);

/// Softmax of [b,H,X,A] kernel logits over a, restricted to mask(x,a) = 1.
Tensor softmax_kernel(const Tensor& logits, const Tensor& mask = {});

/// cjoin with the kernel softmax taken per output row x over the unmasked
/// a only: out[x,h,s] = sum_a e[a,h,s] m(x,a) v[h,x,a] / sum_a e[a,h,s] m(x,a)
/// with e = exp(logits - max_a logits). Without a mask this equals
/// op_cjoin(softmax over a, premise). Every mask row needs an unmasked entry.
/// Kernel dropout, when given, applies to the normalized kernel.
Tensor op_cjoin_normalized(const Tensor& kernel_logits, const Tensor& premise,
                           const Tensor& mask = {}, double kernel_dropout = 0.0,
                           RngState* rng = nullptr);

enum class KernelActivation { kIdentity, kSoftmax };

/// A kernel tensor tagged with its operator and activation.
struct OperatorKernel {
  char op = 'j';
  Tensor kernel;
  KernelActivation activation = KernelActivation::kSoftmax;
  Tensor mask;
};

/// Default kernel activation for an operator letter (softmax for j, c, m, t).
KernelActivation default_activation(char op);

/// Dispatches to the operator named by k.op.
Tensor apply(const OperatorKernel& k, const Tensor& premise);

}  // namespace folnet::logic
