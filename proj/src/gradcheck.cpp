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

#include "folnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace folnet {

std::vector<double> finite_diff_grad(const std::function<double()>& f, Tensor& x,
                                     double eps) {
  auto v = x.mutable_values();
  std::vector<double> g(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double orig = v[i];
    v[i] = orig + eps;
    const double fp = f();
    v[i] = orig - eps;
    const double fm = f();
    v[i] = orig;
    g[i] = (fp - fm) / (2.0 * eps);
  }
  return g;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double bi = i < b.size() ? b[i] : 0.0;
    d += (a[i] - bi) * (a[i] - bi);
    na += a[i] * a[i];
    nb += bi * bi;
  }
  return std::sqrt(d) / std::max({std::sqrt(na), std::sqrt(nb), 1e-8});
}

}  // namespace folnet
