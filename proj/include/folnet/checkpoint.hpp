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
#include <utility>
#include <vector>

#include "folnet/model.hpp"

namespace folnet {

/// On-disk layout:
///   FOLNETCKPT 1\n
///   key=value\n ...          (sorted; ModelConfig fields plus caller extras)
///   tensors=N\nend_header\n
///   N records: u32 name length, name bytes, u32 rank, u64 dims[rank],
///              little-endian f64 values
struct Checkpoint {
  std::map<std::string, std::string> fields;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
};

/// Writes to path + ".tmp" and renames over path.
void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

/// Config fields plus every named parameter, prefixed "param/".
Checkpoint model_checkpoint(const model::ModelConfig& config, const model::ModelParams& params);

/// Rebuilds config and parameters; throws on missing, extra or misshaped tensors.
std::pair<model::ModelConfig, model::ModelParams> load_model(const Checkpoint& ckpt);

}  // namespace folnet
