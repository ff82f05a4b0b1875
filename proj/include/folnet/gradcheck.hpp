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

#include <functional>
#include <vector>

#include "folnet/tensor.hpp"

namespace folnet {

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) for every
/// coordinate of x. Perturbs x in place and restores it afterwards.
std::vector<double> finite_diff_grad(const std::function<double()>& f, Tensor& x,
                                     double eps = 1e-5);

/// ||a - b|| / max(||a||, ||b||, 1e-8).
double relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace folnet
