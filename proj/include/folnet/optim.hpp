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

#include <string>
#include <vector>

#include "folnet/tensor.hpp"

namespace folnet::optim {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-6;
  double weight_decay = 0.01;  // decoupled; applied to tensors of rank >= 2
};

/// Adam with decoupled weight decay and bias correction:
///   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2
///   p -= lr * ( (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps) + wd * p )
class Adam {
 public:
  Adam(std::vector<std::pair<std::string, Tensor>> params, AdamConfig config);

  /// Applies one update from the params' current gradients (missing grads
  /// count as zero) and increments the step counter.
  void step(double lr);

  std::size_t steps() const { return t_; }
  const std::vector<std::pair<std::string, Tensor>>& params() const { return params_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

  /// Restores moments and the step counter (shapes must match).
  void load_state(const std::vector<Tensor>& m, const std::vector<Tensor>& v, std::size_t t);

 private:
  std::vector<std::pair<std::string, Tensor>> params_;
  std::vector<Tensor> m_, v_;
  AdamConfig c_;
  std::size_t t_ = 0;
};

/// Linear warmup then linear decay over `total` updates; `step` is the
/// 1-based update index. lr(0) = 0 when warmup > 0, lr(warmup) = peak,
/// lr(total) = 0. With warmup = 0 the decay starts from peak at step 0.
double linear_schedule(std::size_t step, std::size_t total, std::size_t warmup, double peak);

/// Warmup length for a ratio in [0, 1): round(ratio * total).
std::size_t warmup_steps(double ratio, std::size_t total);

/// Global L2 norm of all gradients.
double grad_norm(const std::vector<std::pair<std::string, Tensor>>& params);

/// Scales every gradient by max_norm / norm when norm > max_norm; returns the
/// norm before clipping. max_norm <= 0 disables clipping.
double clip_grad_norm(std::vector<std::pair<std::string, Tensor>>& params, double max_norm);

}  // namespace folnet::optim
