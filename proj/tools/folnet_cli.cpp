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

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "folnet/checkpoint.hpp"
#include "folnet/mp_oracle.hpp"
#include "folnet/text2text.hpp"
#include "folnet/train.hpp"

namespace {

using nlohmann::json;
using folnet::train::TrainConfig;

struct ConfigArgs {
  std::string path;
  std::vector<std::string> sets;
  std::string task, ops, checkpoint, metrics;
  std::size_t steps = 0, stop_after = 0;
  std::uint64_t seed = 0;
  double lr = -1;
  bool seed_given = false;
};

void add_config_options(CLI::App* cmd, ConfigArgs& a) {
  cmd->add_option("-c,--config", a.path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", a.sets, "Override KEY=VALUE (dotted keys, e.g. model.d1=32)");
  cmd->add_option("--task", a.task, "Task: copy, reverse, mlm_synthetic, kinship2hop, pairclass");
  cmd->add_option("--ops", a.ops, "Operator spec, e.g. jmc.atp");
  cmd->add_option("--steps", a.steps, "Total optimizer steps");
  cmd->add_option("--stop-after", a.stop_after, "Stop and checkpoint after this many steps");
  cmd->add_option("--seed", a.seed, "Run seed")->each([&](const std::string&) { a.seed_given = true; });
  cmd->add_option("--lr", a.lr, "Peak learning rate");
  cmd->add_option("--checkpoint", a.checkpoint, "Checkpoint file");
  cmd->add_option("--metrics", a.metrics, "Metrics JSONL file");
}

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

TrainConfig resolve_config(const ConfigArgs& a) {
  json j = TrainConfig{}.to_json();
  if (!a.path.empty()) {
    std::ifstream in(a.path);
    json file = json::parse(in);
    if (!file.is_object()) throw std::invalid_argument("config file must hold a JSON object");
    j.merge_patch(file);
  }
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--set expects KEY=VALUE, got " + s);
    std::string key = s.substr(0, eq);
    std::string ptr = "/";
    for (char ch : key) ptr += ch == '.' ? '/' : ch;
    j[json::json_pointer(ptr)] = parse_value(s.substr(eq + 1));
  }
  if (!a.task.empty()) j["task"] = a.task;
  if (!a.ops.empty()) j["model"]["ops"] = a.ops;
  if (a.steps) j["steps"] = a.steps;
  if (a.stop_after) j["stop_after"] = a.stop_after;
  if (a.seed_given) j["seed"] = a.seed;
  if (a.lr >= 0) j["peak_lr"] = a.lr;
  if (!a.checkpoint.empty()) j["checkpoint_path"] = a.checkpoint;
  if (!a.metrics.empty()) j["metrics_path"] = a.metrics;
  auto c = TrainConfig::from_json(j);
  c.validate();
  return c;
}

std::vector<int> parse_tokens(const std::string& s) {
  std::vector<int> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::istringstream words(item);
    for (std::string w; words >> w;) out.push_back(std::stoi(w));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FOLNet training, evaluation and verification"};
  app.require_subcommand(1);

  ConfigArgs train_args;
  std::string resume;
  bool print_config = false;
  auto* train = app.add_subcommand("train", "Train a model on a synthetic task");
  add_config_options(train, train_args);
  train->add_option("--resume", resume, "Resume from this checkpoint")->check(CLI::ExistingFile);
  train->add_flag("--print-config", print_config, "Print the resolved config and exit");

  ConfigArgs eval_args;
  std::size_t eval_n = 512;
  std::uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a task");
  add_config_options(eval, eval_args);
  eval->add_option("-n,--examples", eval_n, "Held-out examples");
  eval->add_option("--eval-seed", eval_seed, "Seed of the held-out set");

  std::uint64_t verify_seed = 0;
  auto* verify = app.add_subcommand("verify-logic", "Check the probabilistic semantics numerically");
  verify->add_option("--seed", verify_seed, "Sampling seed");

  std::string gen_ckpt, prompt, mode = "causal";
  std::size_t gen_len = 0;
  int end_token = -1;
  auto* gen = app.add_subcommand("generate", "Greedy generation from a checkpoint");
  gen->add_option("--checkpoint", gen_ckpt, "Checkpoint file (default from the environment)");
  gen->add_option("--prompt", prompt, "Prompt token ids, space or comma separated")->required();
  gen->add_option("--max-len", gen_len, "Total output length")->required();
  gen->add_option("--end-token", end_token, "Stop after emitting this id");
  gen->add_option("--mode", mode, "Mask mode: causal or prefix")
      ->check(CLI::IsMember({"causal", "prefix"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      auto c = resolve_config(train_args);
      if (print_config) {
        std::cout << c.to_json().dump(2) << "\n";
        return 0;
      }
      auto r = folnet::train::run_training(c, resume);
      json out{{"steps", r.steps_done}, {"final_loss", r.final_loss},
               {"checkpoint", r.checkpoint_path}};
      if (r.last_eval) {
        out["eval_accuracy"] = r.last_eval->accuracy;
        out["eval_loss"] = r.last_eval->loss;
      }
      std::cout << out.dump() << "\n";
    } else if (*eval) {
      auto c = resolve_config(eval_args);
      const auto path = folnet::train::resolve_checkpoint_path(c);
      auto rep = folnet::train::evaluate_checkpoint(path, c, eval_n, eval_seed);
      std::cout << json{{"checkpoint", path}, {"task", folnet::tasks::task_name(c.task)},
                        {"accuracy", rep.accuracy}, {"loss", rep.loss},
                        {"examples", rep.examples}, {"scored", rep.scored}}
                       .dump()
                << "\n";
    } else if (*verify) {
      auto results = folnet::mp::verification_report(verify_seed);
      std::cout << folnet::mp::format_report(results);
      for (const auto& r : results)
        if (!r.pass) return 1;
    } else if (*gen) {
      TrainConfig c;
      c.checkpoint_path = gen_ckpt;
      const auto path = folnet::train::resolve_checkpoint_path(c);
      auto [mc, params] = folnet::load_model(folnet::read_checkpoint(path));
      auto out = folnet::text2text::greedy_generate(parse_tokens(prompt), params, mc, gen_len,
                                                    end_token, folnet::parse_mask_mode(mode));
      for (std::size_t i = 0; i < out.size(); ++i) std::cout << (i ? " " : "") << out[i];
      std::cout << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
