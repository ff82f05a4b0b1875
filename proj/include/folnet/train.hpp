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

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "folnet/model.hpp"
#include "folnet/optim.hpp"
#include "folnet/tasks.hpp"

namespace folnet::train {

struct TrainConfig {
  model::ModelConfig model;
  tasks::TaskKind task = tasks::TaskKind::kCopy;
  std::size_t seq_len = 16;
  std::size_t steps = 2000;
  std::size_t batch_size = 16;
  double peak_lr = 1e-3;
  double warmup_ratio = 0.1;
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-6;
  double grad_clip = 1.0;
  std::uint64_t seed = 0;
  std::size_t eval_every = 500;
  std::size_t eval_examples = 512;
  std::size_t log_every = 1;
  std::size_t stop_after = 0;  // stop (and checkpoint) after this many total steps; 0 = steps
  double mask_rate = 0.15;
  std::size_t n_entities = 12;
  std::size_t distractors = 2;
  std::string checkpoint_path;  // empty = $FOLNET_CHECKPOINT_DIR/folnet.ckpt, else ./folnet.ckpt
  std::string metrics_path;     // empty = no metrics file

  void validate() const;
  nlohmann::json to_json() const;
  /// Strict: unknown keys are errors. Missing keys keep their defaults.
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Environment variable naming the default checkpoint directory.
inline constexpr const char* kCheckpointDirEnv = "FOLNET_CHECKPOINT_DIR";
std::string resolve_checkpoint_path(const TrainConfig& config);

/// Generates n examples of the configured task.
std::vector<tasks::TaskExample> generate(const TrainConfig& config, RngState& rng, std::size_t n);

struct BatchResult {
  Tensor loss;               // scalar, weighted mean over scored items
  std::size_t correct = 0;   // argmax hits among scored items
  std::size_t scored = 0;    // target tokens or examples
};

/// Forward pass and loss for one batch of examples.
BatchResult batch_loss(const TrainConfig& config, const model::ModelParams& params,
                       const std::vector<tasks::TaskExample>& examples,
                       const model::ForwardOptions& opts = {});

struct EvalReport {
  double accuracy = 0.0;
  double loss = 0.0;
  std::size_t examples = 0;
  std::size_t scored = 0;
};

/// Deterministic evaluation on n held-out examples drawn from `seed`.
EvalReport evaluate(const TrainConfig& config, const model::ModelParams& params, std::size_t n,
                    std::uint64_t seed);

/// Loads a checkpoint and evaluates it on the configured task. Throws when
/// the checkpoint's model cannot serve the task.
EvalReport evaluate_checkpoint(const std::string& path, const TrainConfig& task_config,
                               std::size_t n, std::uint64_t seed);

/// Checks the model config can run the task (vocab, classes, lengths).
void check_compatible(const TrainConfig& config);

struct TrainResult {
  model::ModelParams params;
  std::size_t steps_done = 0;
  double final_loss = 0.0;
  std::optional<EvalReport> last_eval;
  std::string checkpoint_path;
};

/// Runs the training loop. With resume_from set, parameters, optimizer state
/// and the step counter come from that checkpoint and metrics are appended.
TrainResult run_training(const TrainConfig& config, const std::string& resume_from = "");

/// Seed stream of the held-out set.
inline constexpr std::uint64_t kEvalStream = 0xE7A1u;

}  // namespace folnet::train
