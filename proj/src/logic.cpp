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

#include "folnet/logic.hpp"

#include <cmath>
#include <string>

#include "folnet/ops.hpp"

namespace folnet::logic {
namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (t.ndim() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " +
                     std::to_string(rank) + ", got " + shape_str(t.shape()));
  }
}

void require(bool ok, const char* op, const Tensor& kernel, const Tensor& premise) {
  if (!ok) {
    throw ShapeError(std::string(op) + ": kernel " + shape_str(kernel.shape()) +
                     " incompatible with premise " + shape_str(premise.shape()));
  }
}

// Mask [mb, X, A] viewed as [mb, 1, X, A] after checking it against the
// batch and the two token axes.
Tensor mask4(const Tensor& mask, std::size_t batch, std::size_t x, std::size_t a,
             const char* op) {
  const Shape& s = mask.shape();
  if (s.size() != 3 || (s[0] != 1 && s[0] != batch) || s[1] != x || s[2] != a) {
    throw ShapeError(std::string(op) + ": mask " + shape_str(s) + " does not fit [" +
                     std::to_string(batch) + ", " + std::to_string(x) + ", " +
                     std::to_string(a) + "]");
  }
  return reshape(mask, {s[0], 1, x, a});
}

}  // namespace

Tensor op_join(const Tensor& kernel, const Tensor& premise, const Tensor& mask) {
  require_rank(kernel, 4, "op_join", "kernel");
  require_rank(premise, 4, "op_join", "premise");
  const auto& k = kernel.shape();
  const auto& v = premise.shape();
  require(k[0] == v[0] && k[1] == v[2] && k[3] == v[1], "op_join", kernel, premise);
  Tensor kk = kernel;
  if (mask.defined()) kk = mul(kernel, mask4(mask, k[0], k[2], k[3], "op_join"));
  // [b,A,H,S] -> [b,H,A,S]; [b,H,X,A]x[b,H,A,S] = [b,H,X,S] -> [b,X,H,S]
  auto out = batched_matmul(kk, permute(premise, {0, 2, 1, 3}));
  return permute(out, {0, 2, 1, 3});
}

Tensor op_assoc(const Tensor& kernel, const Tensor& premise) {
  require_rank(kernel, 4, "op_assoc", "kernel");
  require_rank(premise, 4, "op_assoc", "premise");
  const auto& k = kernel.shape();
  const auto& v = premise.shape();
  require(k[0] == v[0] && k[2] == v[2] && k[3] == v[3], "op_assoc", kernel, premise);
  // [b,H,X,W] x [b,H,W,Y] = [b,H,X,Y]
  auto out = batched_matmul(permute(kernel, {0, 2, 1, 3}), permute(premise, {0, 2, 3, 1}));
  return scale(out, 1.0 / std::sqrt(static_cast<double>(k[3])));
}

Tensor op_cjoin(const Tensor& kernel, const Tensor& premise, const Tensor& mask) {
  require_rank(kernel, 4, "op_cjoin", "kernel");
  require_rank(premise, 4, "op_cjoin", "premise");
  const auto& k = kernel.shape();
  const auto& v = premise.shape();
  require(k[0] == v[0] && k[1] == v[3] && k[2] == v[1], "op_cjoin", kernel, premise);
  Tensor vv = premise;
  if (mask.defined()) vv = mul(premise, mask4(mask, v[0], v[2], v[3], "op_cjoin"));
  // [b,H,X,A] x [b,H,A,S] = [b,H,X,S] -> [b,X,H,S]
  auto out = batched_matmul(vv, permute(kernel, {0, 2, 1, 3}));
  return permute(out, {0, 2, 1, 3});
}

Tensor op_mu(const Tensor& kernel, const Tensor& premise, const Tensor& mask) {
  require_rank(kernel, 4, "op_mu", "kernel");
  require_rank(premise, 4, "op_mu", "premise");
  const auto& k = kernel.shape();
  const auto& v = premise.shape();
  require(k[0] == v[0] && k[2] == v[2] && k[3] == v[3], "op_mu", kernel, premise);
  Tensor kk = kernel, vv = premise;
  if (mask.defined()) {
    auto m = mask4(mask, k[0], k[2], k[3], "op_mu");
    kk = mul(kernel, m);
    vv = mul(premise, m);
  }
  // [b,X,H,A] x [b,X,A,S] = [b,X,H,S]
  return batched_matmul(permute(kk, {0, 2, 1, 3}), permute(vv, {0, 2, 3, 1}));
}

Tensor op_prod(const Tensor& kernel, const Tensor& premise, const Tensor& mask) {
  require_rank(kernel, 4, "op_prod", "kernel");
  require_rank(premise, 4, "op_prod", "premise");
  const auto& k = kernel.shape();
  const auto& v = premise.shape();
  require(k[0] == v[0] && k[1] == v[2] && k[3] == v[1], "op_prod", kernel, premise);
  Tensor vv = premise;
  if (mask.defined()) vv = mul(premise, mask4(mask, v[0], v[2], v[3], "op_prod"));
  // [b,X,H,W] x [b,X,W,Y] = [b,X,H,Y] -> [b,H,X,Y]
  auto out = batched_matmul(kernel, permute(vv, {0, 2, 1, 3}));
  return permute(out, {0, 2, 1, 3});
}

Tensor op_trans(const Tensor& kernel, const Tensor& premise, const Tensor& mask) {
  require_rank(kernel, 4, "op_trans", "kernel");
  require_rank(premise, 4, "op_trans", "premise");
  const auto& k = kernel.shape();
  const auto& v = premise.shape();
  require(k[0] == v[0] && k[1] == v[1] && k[3] == v[2], "op_trans", kernel, premise);
  Tensor kk = kernel, vv = premise;
  if (mask.defined()) {
    kk = mul(kernel, mask4(mask, k[0], k[2], k[3], "op_trans"));
    vv = mul(premise, mask4(mask, v[0], v[2], v[3], "op_trans"));
  }
  return batched_matmul(kk, vv);
}

Tensor bool_ffn(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
                const Tensor& b2) {
  auto h = elementwise(linear(x, w1, &b1), Activation::kGelu);
  return linear(h, w2, &b2);
}

Tensor softmax_kernel(const Tensor& logits, const Tensor& mask) {
  require_rank(logits, 4, "softmax_kernel", "logits");
  if (!mask.defined()) return softmax_axis(logits, -1);
  const auto& k = logits.shape();
  return masked_softmax(logits, mask4(mask, k[0], k[2], k[3], "softmax_kernel"));
}

Tensor op_cjoin_normalized(const Tensor& kernel_logits, const Tensor& premise,
                           const Tensor& mask, double kernel_dropout, RngState* rng) {
  require_rank(kernel_logits, 4, "op_cjoin", "kernel");
  require_rank(premise, 4, "op_cjoin", "premise");
  const bool drop = kernel_dropout > 0.0;
  if (!mask.defined() && !drop) return op_cjoin(softmax_axis(kernel_logits, 1), premise);
  if (drop && !rng) throw std::invalid_argument("op_cjoin: kernel dropout needs an rng");
  const auto& v = premise.shape();
  Tensor m4 = Tensor::full({1, 1, v[2], v[3]}, 1.0);
  if (mask.defined()) {
    m4 = mask4(mask, v[0], v[2], v[3], "op_cjoin");
    const auto& ms = mask.shape();
    for (std::size_t r = 0; r < ms[0] * ms[1]; ++r) {
      bool any = false;
      for (std::size_t a = 0; a < ms[2]; ++a) any = any || mask.values()[r * ms[2] + a] != 0.0;
      if (!any) throw std::invalid_argument("op_cjoin: mask row without unmasked entries");
    }
  }
  auto e = elementwise(sub(kernel_logits, max_along(kernel_logits, 1)), Activation::kExp);
  auto num = op_cjoin(drop ? dropout(e, kernel_dropout, *rng) : e, mul(premise, m4));
  auto den = op_cjoin(e, mul(Tensor::full({v[0], v[1], v[2], v[3]}, 1.0), m4));
  return div(num, den);
}

KernelActivation default_activation(char op) {
  switch (op) {
    case 'j':
    case 'c':
    case 'm':
    case 't':
      return KernelActivation::kSoftmax;
    case 'a':
    case 'p':
      return KernelActivation::kIdentity;
    default:
      throw std::invalid_argument(std::string("unknown operator '") + op + "'");
  }
}

Tensor apply(const OperatorKernel& k, const Tensor& premise) {
  const bool soft = k.activation == KernelActivation::kSoftmax;
  switch (k.op) {
    case 'j':
      return op_join(soft ? softmax_kernel(k.kernel, k.mask) : k.kernel, premise, k.mask);
    case 'm':
      return op_mu(soft ? softmax_kernel(k.kernel, k.mask) : k.kernel, premise, k.mask);
    case 't':
      return op_trans(soft ? softmax_kernel(k.kernel, k.mask) : k.kernel, premise, k.mask);
    case 'c':
      if (soft) return op_cjoin_normalized(k.kernel, premise, k.mask);
      return op_cjoin(k.kernel, premise, k.mask);
    case 'a':
      if (soft) throw std::invalid_argument("op_assoc takes an identity kernel");
      return op_assoc(k.kernel, premise);
    case 'p':
      if (soft) throw std::invalid_argument("op_prod takes an identity kernel");
      return op_prod(k.kernel, premise, k.mask);
    default:
      throw std::invalid_argument(std::string("unknown operator '") + k.op + "'");
  }
}

}  // namespace folnet::logic
