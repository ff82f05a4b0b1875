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

#include <span>
#include <string_view>
#include <vector>

#include "folnet/tensor.hpp"

namespace folnet {

/// Pointwise functions with registered analytic derivatives.
///   kLog1p2Exp:   z -> ln(1 + 2 e^z), the logit-space implication activation
///   kReluShiftLn2: z -> max(0, z + ln 2), its piecewise-linear lower bound
///   kGelu:        tanh approximation
enum class Activation { kGelu, kSigmoid, kLog1p2Exp, kReluShiftLn2, kTanh, kExp, kRelu };

Activation parse_activation(std::string_view name);
double activation_value(Activation fn, double x);
double activation_derivative(Activation fn, double x);

// Elementwise arithmetic with numpy-style broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

Tensor sum(const Tensor& a);   // scalar
Tensor mean(const Tensor& a);  // scalar

Tensor reshape(const Tensor& a, Shape shape);
Tensor permute(const Tensor& a, std::vector<std::size_t> perm);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& a, int axis, std::size_t start, std::size_t length);

/// out[..., m, n] = sum_k a[..., m, k] * b[..., k, n]. Leading axes broadcast
/// (right-aligned, size-1 or missing axes expand).
Tensor batched_matmul(const Tensor& a, const Tensor& b);

/// x[..., Din] * w[Din, Dout] (+ b[Dout]).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor* b = nullptr);

Tensor softmax_axis(const Tensor& x, int axis);

/// Softmax over the last axis where mask == 0 entries act as -1e9 logits and
/// come out exactly zero. The mask is a constant broadcastable to x.
Tensor masked_softmax(const Tensor& x, const Tensor& mask);

Tensor elementwise(const Tensor& x, Activation fn);

/// Normalizes over the last axis.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-12);

/// Row gather: output shape is ids_shape + [table.dim(1)].
Tensor embedding(const Tensor& table, std::span<const int> ids, const Shape& ids_shape);

/// Inverted dropout; identity when rate == 0.
Tensor dropout(const Tensor& x, double rate, RngState& rng);

/// Weighted mean token cross-entropy: sum_i w_i * -log softmax(logits_i)[t_i]
/// divided by sum_i w_i. Rows with zero weight are skipped.
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets,
                     std::span<const double> weights);

/// Constant (no graph) maximum along an axis, kept as a size-1 axis.
Tensor max_along(const Tensor& x, int axis);

}  // namespace folnet
