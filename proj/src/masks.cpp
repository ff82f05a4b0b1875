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

#include "folnet/masks.hpp"

#include <stdexcept>

namespace folnet {

MaskMode parse_mask_mode(const std::string& s) {
  if (s == "none") return MaskMode::kNone;
  if (s == "causal") return MaskMode::kCausal;
  if (s == "prefix") return MaskMode::kPrefix;
  if (s == "encdec") return MaskMode::kEncDec;
  throw std::invalid_argument("unknown mask mode '" + s + "'");
}

std::string mask_mode_name(MaskMode m) {
  switch (m) {
    case MaskMode::kNone: return "none";
    case MaskMode::kCausal: return "causal";
    case MaskMode::kPrefix: return "prefix";
    case MaskMode::kEncDec: return "encdec";
  }
  return "none";
}

MaskSet build_masks(MaskMode mode, std::size_t T, std::size_t prefix_len) {
  if (T == 0) throw std::invalid_argument("build_masks: T must be positive");
  if (mode == MaskMode::kPrefix && prefix_len >= T) {
    throw std::invalid_argument("build_masks: prefix_len must be < T");
  }
  if (mode == MaskMode::kEncDec && (prefix_len == 0 || prefix_len >= T)) {
    throw std::invalid_argument("build_masks: encdec needs 0 < input length < T");
  }
  MaskSet ms;
  ms.mode = mode;
  ms.T = T;
  ms.prefix_len = mode == MaskMode::kPrefix || mode == MaskMode::kEncDec ? prefix_len : 0;
  std::vector<double> v(T * T);
  for (std::size_t x = 0; x < T; ++x)
    for (std::size_t a = 0; a < T; ++a) {
      bool on = true;
      if (mode == MaskMode::kCausal) on = a <= x;
      if (mode == MaskMode::kPrefix || mode == MaskMode::kEncDec) {
        on = a <= x || (x < ms.prefix_len && a < ms.prefix_len);
      }
      v[x * T + a] = on ? 1.0 : 0.0;
    }
  ms.flow = Tensor::from({1, T, T}, std::move(v));
  for (char op : std::string("cjmpt")) ms.op_masks[op] = ms.flow;
  return ms;
}

}  // namespace folnet
