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

#include <map>
#include <string>

#include "folnet/tensor.hpp"

namespace folnet {

enum class MaskMode { kNone, kCausal, kPrefix, kEncDec };

MaskMode parse_mask_mode(const std::string& s);
std::string mask_mode_name(MaskMode m);

/// 0/1 [1, T, T] masks for the masked kernels and premises, keyed by
/// operator letter (c, j, m, p, t). assoc and bool are never masked.
struct MaskSet {
  MaskMode mode = MaskMode::kNone;
  std::size_t T = 0;
  std::size_t prefix_len = 0;
  std::map<char, Tensor> op_masks;
  Tensor flow;  // the [1, T, T] information-flow pattern the op masks share

  bool masks(char op) const { return op_masks.count(op) != 0; }
};

/// Builds the masks for a mode. For kPrefix, prefix_len tokens form the
/// bidirectional block; for kEncDec, prefix_len is the input length and the
/// pattern is the prefix pattern over the concatenated [input; target].
MaskSet build_masks(MaskMode mode, std::size_t T, std::size_t prefix_len = 0);

}  // namespace folnet
