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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace folnet {

using Shape = std::vector<std::size_t>;

/// Raised on any tensor shape or axis contract violation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string shape_str(const Shape& s);
std::size_t numel_of(const Shape& s);

/// Seeded generator used everywhere randomness is needed. Identical seed and
/// algorithm give identical draw sequences.
struct RngState {
  static constexpr const char* kAlgorithm = "mt19937_64";

  explicit RngState(std::uint64_t seed = 0) : seed(seed), engine(seed) {}

  std::uint64_t seed;
  std::mt19937_64 engine;

  /// Derives an independent stream from (seed, stream) with splitmix64 so
  /// that per-step streams never depend on how many draws came before.
  static RngState derive(std::uint64_t seed, std::uint64_t stream);

  double uniform();                    // [0, 1)
  double normal(double mean, double std);
  double truncated_normal(double std);  // resampled outside +-2 std
  std::size_t index(std::size_t n);     // uniform in [0, n)
};

struct TensorImpl;

/// Backward closure: receives d(root)/d(output) and accumulates into parents.
struct GradNode {
  std::vector<std::shared_ptr<TensorImpl>> parents;
  std::function<void(std::span<const double> grad_out)> backward;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::shared_ptr<GradNode> node;

  void accumulate(std::span<const double> g);
  std::span<double> grad_buffer();
};

/// Dense row-major tensor of doubles with an optional reverse-mode graph
/// node. Copies share storage; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor randn(Shape shape, RngState& rng, double std = 1.0,
                      bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t ndim() const { return shape().size(); }
  std::size_t dim(int axis) const;
  std::size_t numel() const;

  std::span<const double> values() const;
  /// Mutable access for leaves (parameters, inputs). Writing into a tensor
  /// that already fed a graph invalidates that graph.
  std::span<double> mutable_values();
  double item() const;
  double at(std::initializer_list<std::size_t> idx) const;

  bool requires_grad() const;
  void set_requires_grad(bool on);
  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  /// Reverse sweep from this scalar. Leaf grads accumulate across calls;
  /// intermediate grads are recomputed each call.
  void backward() const;

  Tensor clone() const;    // deep copy of values, no graph, same flag
  Tensor detach() const;   // shares nothing, no graph, no grad

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<TensorImpl> impl_;
};

/// Builds an op output. If any parent requires grad, attaches a node with
/// the given closure; otherwise the closure is dropped.
Tensor make_result(Shape shape, std::vector<double> values,
                   std::vector<Tensor> parents,
                   std::function<void(std::span<const double>)> backward);

std::size_t normalize_axis(int axis, std::size_t ndim);

}  // namespace folnet
