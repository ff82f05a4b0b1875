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

#include "folnet/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace folnet::optim {

Adam::Adam(std::vector<std::pair<std::string, Tensor>> params, AdamConfig config)
    : params_(std::move(params)), c_(config) {
  for (const auto& [name, p] : params_) {
    m_.push_back(Tensor::zeros(p.shape()));
    v_.push_back(Tensor::zeros(p.shape()));
  }
}

void Adam::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(c_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(c_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].second;
    auto pv = p.mutable_values();
    auto mv = m_[i].mutable_values();
    auto vv = v_[i].mutable_values();
    const auto& g = p.impl()->grad;
    const double wd = p.ndim() >= 2 ? c_.weight_decay : 0.0;
    for (std::size_t j = 0; j < pv.size(); ++j) {
      const double gj = g.empty() ? 0.0 : g[j];
      mv[j] = c_.beta1 * mv[j] + (1.0 - c_.beta1) * gj;
      vv[j] = c_.beta2 * vv[j] + (1.0 - c_.beta2) * gj * gj;
      const double mhat = mv[j] / bc1;
      const double vhat = vv[j] / bc2;
      pv[j] -= lr * (mhat / (std::sqrt(vhat) + c_.eps) + wd * pv[j]);
    }
  }
}

void Adam::load_state(const std::vector<Tensor>& m, const std::vector<Tensor>& v, std::size_t t) {
  if (m.size() != params_.size() || v.size() != params_.size()) {
    throw std::invalid_argument("Adam::load_state: moment count does not match parameters");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (m[i].shape() != m_[i].shape() || v[i].shape() != v_[i].shape()) {
      throw ShapeError("Adam::load_state: moment shape mismatch for " + params_[i].first);
    }
    m_[i] = m[i].clone();
    v_[i] = v[i].clone();
  }
  t_ = t;
}

double linear_schedule(std::size_t step, std::size_t total, std::size_t warmup, double peak) {
  if (total == 0) throw std::invalid_argument("linear_schedule: total must be positive");
  if (warmup >= total) throw std::invalid_argument("linear_schedule: warmup must be < total");
  if (step >= total) return 0.0;
  if (step < warmup) return peak * static_cast<double>(step) / static_cast<double>(warmup);
  return peak * static_cast<double>(total - step) / static_cast<double>(total - warmup);
}

std::size_t warmup_steps(double ratio, std::size_t total) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw std::invalid_argument("warmup ratio outside [0, 1)");
  const auto w = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(total)));
  return total == 0 ? 0 : std::min(w, total - 1);
}

double grad_norm(const std::vector<std::pair<std::string, Tensor>>& params) {
  double s = 0.0;
  for (const auto& [name, p] : params)
    for (double g : p.impl()->grad) s += g * g;
  return std::sqrt(s);
}

double clip_grad_norm(std::vector<std::pair<std::string, Tensor>>& params, double max_norm) {
  const double norm = grad_norm(params);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [name, p] : params)
      for (double& g : p.impl()->grad) g *= scale;
  }
  return norm;
}

}  // namespace folnet::optim
