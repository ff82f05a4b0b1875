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

#include "folnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

namespace folnet {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ", ";
    os << s[i];
  }
  os << ']';
  return os.str();
}

std::size_t numel_of(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::size_t normalize_axis(int axis, std::size_t ndim) {
  const int n = static_cast<int>(ndim);
  const int a = axis < 0 ? axis + n : axis;
  if (a < 0 || a >= n) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for rank " +
                     std::to_string(ndim));
  }
  return static_cast<std::size_t>(a);
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RngState RngState::derive(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  std::uint64_t t = stream ^ a;
  return RngState(splitmix64(t));
}

double RngState::uniform() {
  // 53 random bits; avoids std::uniform_real_distribution's
  // implementation-defined algorithm so draws are portable.
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

double RngState::normal(double mean, double std) {
  // Box-Muller, one value per call.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  return mean + std * z;
}

double RngState::truncated_normal(double std) {
  for (;;) {
    const double z = normal(0.0, 1.0);
    if (std::abs(z) <= 2.0) return z * std;
  }
}

std::size_t RngState::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("RngState::index: empty range");
  // Rejection sampling for an unbiased draw.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  for (;;) {
    const std::uint64_t r = engine();
    if (r < limit) return static_cast<std::size_t>(r % n);
  }
}

void TensorImpl::accumulate(std::span<const double> g) {
  if (grad.empty()) grad.assign(values.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

std::span<double> TensorImpl::grad_buffer() {
  if (grad.empty()) grad.assign(values.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  impl->values.assign(numel_of(shape), value);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (numel_of(shape) != values.size()) {
    throw ShapeError("Tensor::from: shape " + shape_str(shape) + " needs " +
                     std::to_string(numel_of(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->values = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from({}, {v}, requires_grad);
}

Tensor Tensor::randn(Shape shape, RngState& rng, double std, bool requires_grad) {
  std::vector<double> v(numel_of(shape));
  for (auto& x : v) x = rng.normal(0.0, std);
  return from(std::move(shape), std::move(v), requires_grad);
}

const Shape& Tensor::shape() const {
  if (!impl_) throw std::logic_error("undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::dim(int axis) const {
  return shape()[normalize_axis(axis, ndim())];
}

std::size_t Tensor::numel() const { return impl_ ? impl_->values.size() : 0; }

std::span<const double> Tensor::values() const { return impl_->values; }

std::span<double> Tensor::mutable_values() { return impl_->values; }

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  }
  return impl_->values[0];
}

double Tensor::at(std::initializer_list<std::size_t> idx) const {
  const auto& s = shape();
  if (idx.size() != s.size()) throw ShapeError("at(): rank mismatch");
  std::size_t off = 0;
  std::size_t k = 0;
  for (auto i : idx) {
    if (i >= s[k]) throw ShapeError("at(): index out of range");
    off = off * s[k] + i;
    ++k;
  }
  return impl_->values[off];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool on) { impl_->requires_grad = on; }

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const { return impl_->grad; }

void Tensor::zero_grad() {
  if (impl_) impl_->grad.clear();
}

void Tensor::backward() const {
  if (numel() != 1 || !shape().empty()) {
    throw ShapeError("backward() requires a scalar root, got shape " +
                     shape_str(shape()));
  }
  // Iterative post-order DFS for a topological order of graph nodes.
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> seen;
  std::vector<std::pair<TensorImpl*, std::size_t>> stack;
  stack.emplace_back(impl_.get(), 0);
  seen.insert(impl_.get());
  while (!stack.empty()) {
    auto& [t, next] = stack.back();
    if (t->node && next < t->node->parents.size()) {
      TensorImpl* p = t->node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(t);
      stack.pop_back();
    }
  }
  // Intermediate buffers restart from zero each sweep; leaves accumulate.
  for (TensorImpl* t : order) {
    if (t->node) t->grad.assign(t->values.size(), 0.0);
  }
  impl_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* t = *it;
    if (t->node && t->node->backward) t->node->backward(t->grad);
  }
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->values = impl_->values;
  impl->requires_grad = impl_->requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->values = impl_->values;
  return Tensor(std::move(impl));
}

Tensor make_result(Shape shape, std::vector<double> values,
                   std::vector<Tensor> parents,
                   std::function<void(std::span<const double>)> backward) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->values = std::move(values);
  bool any = false;
  for (const auto& p : parents) any = any || p.requires_grad();
  if (any) {
    impl->requires_grad = true;
    auto node = std::make_shared<GradNode>();
    for (auto& p : parents) node->parents.push_back(p.impl());
    node->backward = std::move(backward);
    impl->node = std::move(node);
  }
  return Tensor(std::move(impl));
}

}  // namespace folnet
