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

#include "folnet/train.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>

#include "folnet/checkpoint.hpp"
#include "folnet/ops.hpp"
#include "folnet/text2text.hpp"

namespace folnet::train {

using nlohmann::json;

namespace {

constexpr std::uint64_t kInitStream = 1ull << 62;
constexpr std::uint64_t kStepStreamBase = 1ull << 40;

json model_to_json(const model::ModelConfig& c) {
  return json{{"layers", c.layers},
              {"d1", c.d1},
              {"d2", c.d2},
              {"heads", c.heads},
              {"head_size", c.head_size},
              {"delta", c.delta},
              {"vocab", c.vocab},
              {"ffn1", c.ffn1},
              {"ffn2", c.ffn2},
              {"ops", c.ops.str()},
              {"dropout", c.dropout},
              {"attn_dropout", c.attn_dropout},
              {"attn_dropout_ops", c.attn_dropout_ops},
              {"use_ape", c.use_ape},
              {"max_len", c.max_len},
              {"tie_mlm", c.tie_mlm},
              {"num_classes", c.num_classes},
              {"init_std", c.init_std},
              {"ln_eps", c.ln_eps}};
}

model::ModelConfig model_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: \"model\" must be an object");
  model::ModelConfig c;
  const std::map<std::string, std::function<void(const json&)>> set{
      {"layers", [&](const json& v) { c.layers = v.get<std::size_t>(); }},
      {"d1", [&](const json& v) { c.d1 = v.get<std::size_t>(); }},
      {"d2", [&](const json& v) { c.d2 = v.get<std::size_t>(); }},
      {"heads", [&](const json& v) { c.heads = v.get<std::size_t>(); }},
      {"head_size", [&](const json& v) { c.head_size = v.get<std::size_t>(); }},
      {"delta", [&](const json& v) { c.delta = v.get<int>(); }},
      {"vocab", [&](const json& v) { c.vocab = v.get<std::size_t>(); }},
      {"ffn1", [&](const json& v) { c.ffn1 = v.get<std::size_t>(); }},
      {"ffn2", [&](const json& v) { c.ffn2 = v.get<std::size_t>(); }},
      {"ops", [&](const json& v) { c.ops = model::parse_operator_spec(v.get<std::string>()); }},
      {"dropout", [&](const json& v) { c.dropout = v.get<double>(); }},
      {"attn_dropout", [&](const json& v) { c.attn_dropout = v.get<double>(); }},
      {"attn_dropout_ops", [&](const json& v) { c.attn_dropout_ops = v.get<std::string>(); }},
      {"use_ape", [&](const json& v) { c.use_ape = v.get<bool>(); }},
      {"max_len", [&](const json& v) { c.max_len = v.get<std::size_t>(); }},
      {"tie_mlm", [&](const json& v) { c.tie_mlm = v.get<bool>(); }},
      {"num_classes", [&](const json& v) { c.num_classes = v.get<std::size_t>(); }},
      {"init_std", [&](const json& v) { c.init_std = v.get<double>(); }},
      {"ln_eps", [&](const json& v) { c.ln_eps = v.get<double>(); }},
  };
  for (const auto& [k, v] : j.items()) {
    auto it = set.find(k);
    if (it == set.end()) throw std::invalid_argument("config: unknown model field \"" + k + "\"");
    it->second(v);
  }
  return c;
}

std::size_t argmax_row(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = j;
  return best;
}

std::size_t count_hits(const Tensor& logits, const std::vector<int>& targets) {
  const std::size_t V = logits.dim(1);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (argmax_row(logits.values().subspan(i * V, V)) == static_cast<std::size_t>(targets[i])) ++hits;
  }
  return hits;
}

void write_train_checkpoint(const std::string& path, const TrainConfig& config,
                            const model::ModelParams& params, const optim::Adam& adam,
                            std::size_t step) {
  auto ck = model_checkpoint(config.model, params);
  ck.fields["train.config"] = config.to_json().dump();
  ck.fields["train.step"] = std::to_string(step);
  ck.fields["adam.t"] = std::to_string(adam.steps());
  const auto& named = adam.params();
  for (std::size_t i = 0; i < named.size(); ++i) {
    ck.tensors.emplace_back("adam.m/" + named[i].first, adam.first_moments()[i]);
    ck.tensors.emplace_back("adam.v/" + named[i].first, adam.second_moments()[i]);
  }
  const auto dir = std::filesystem::path(path).parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  write_checkpoint(path, ck);
}

// Fields that may differ between an interrupted run and its resumption.
json replay_identity(const TrainConfig& c) {
  auto j = c.to_json();
  j.erase("stop_after");
  j.erase("checkpoint_path");
  j.erase("metrics_path");
  return j;
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  if (seq_len == 0 || steps == 0 || batch_size == 0) {
    throw std::invalid_argument("config: seq_len, steps and batch_size must be positive");
  }
  if (!(peak_lr >= 0.0) || !std::isfinite(peak_lr)) {
    throw std::invalid_argument("config: peak_lr must be finite and >= 0");
  }
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) {
    throw std::invalid_argument("config: warmup_ratio must be in [0, 1)");
  }
  if (weight_decay < 0.0 || grad_clip < 0.0 || adam_eps <= 0.0) {
    throw std::invalid_argument("config: weight_decay, grad_clip >= 0 and adam_eps > 0 required");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw std::invalid_argument("config: adam betas must be in [0, 1)");
  }
  if (log_every == 0) throw std::invalid_argument("config: log_every must be positive");
  if (stop_after > steps) throw std::invalid_argument("config: stop_after exceeds steps");
}

json TrainConfig::to_json() const {
  return json{{"model", model_to_json(model)},
              {"task", tasks::task_name(task)},
              {"seq_len", seq_len},
              {"steps", steps},
              {"batch_size", batch_size},
              {"peak_lr", peak_lr},
              {"warmup_ratio", warmup_ratio},
              {"weight_decay", weight_decay},
              {"adam_beta1", adam_beta1},
              {"adam_beta2", adam_beta2},
              {"adam_eps", adam_eps},
              {"grad_clip", grad_clip},
              {"seed", seed},
              {"eval_every", eval_every},
              {"eval_examples", eval_examples},
              {"log_every", log_every},
              {"stop_after", stop_after},
              {"mask_rate", mask_rate},
              {"n_entities", n_entities},
              {"distractors", distractors},
              {"checkpoint_path", checkpoint_path},
              {"metrics_path", metrics_path}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  TrainConfig c;
  const std::map<std::string, std::function<void(const json&)>> set{
      {"model", [&](const json& v) { c.model = model_from_json(v); }},
      {"task", [&](const json& v) { c.task = tasks::parse_task(v.get<std::string>()); }},
      {"seq_len", [&](const json& v) { c.seq_len = v.get<std::size_t>(); }},
      {"steps", [&](const json& v) { c.steps = v.get<std::size_t>(); }},
      {"batch_size", [&](const json& v) { c.batch_size = v.get<std::size_t>(); }},
      {"peak_lr", [&](const json& v) { c.peak_lr = v.get<double>(); }},
      {"warmup_ratio", [&](const json& v) { c.warmup_ratio = v.get<double>(); }},
      {"weight_decay", [&](const json& v) { c.weight_decay = v.get<double>(); }},
      {"adam_beta1", [&](const json& v) { c.adam_beta1 = v.get<double>(); }},
      {"adam_beta2", [&](const json& v) { c.adam_beta2 = v.get<double>(); }},
      {"adam_eps", [&](const json& v) { c.adam_eps = v.get<double>(); }},
      {"grad_clip", [&](const json& v) { c.grad_clip = v.get<double>(); }},
      {"seed", [&](const json& v) { c.seed = v.get<std::uint64_t>(); }},
      {"eval_every", [&](const json& v) { c.eval_every = v.get<std::size_t>(); }},
      {"eval_examples", [&](const json& v) { c.eval_examples = v.get<std::size_t>(); }},
      {"log_every", [&](const json& v) { c.log_every = v.get<std::size_t>(); }},
      {"stop_after", [&](const json& v) { c.stop_after = v.get<std::size_t>(); }},
      {"mask_rate", [&](const json& v) { c.mask_rate = v.get<double>(); }},
      {"n_entities", [&](const json& v) { c.n_entities = v.get<std::size_t>(); }},
      {"distractors", [&](const json& v) { c.distractors = v.get<std::size_t>(); }},
      {"checkpoint_path", [&](const json& v) { c.checkpoint_path = v.get<std::string>(); }},
      {"metrics_path", [&](const json& v) { c.metrics_path = v.get<std::string>(); }},
  };
  for (const auto& [k, v] : j.items()) {
    auto it = set.find(k);
    if (it == set.end()) throw std::invalid_argument("config: unknown field \"" + k + "\"");
    try {
      it->second(v);
    } catch (const json::exception& e) {
      throw std::invalid_argument("config: bad value for \"" + k + "\": " + e.what());
    }
  }
  return c;
}

std::string resolve_checkpoint_path(const TrainConfig& config) {
  if (!config.checkpoint_path.empty()) return config.checkpoint_path;
  const char* dir = std::getenv(kCheckpointDirEnv);
  const std::filesystem::path base = dir && *dir ? dir : ".";
  return (base / "folnet.ckpt").string();
}

void check_compatible(const TrainConfig& c) {
  const auto& m = c.model;
  auto fail = [](const std::string& msg) { throw std::invalid_argument("task/model mismatch: " + msg); };
  std::size_t need_vocab = 0, need_len = 0;
  switch (c.task) {
    case tasks::TaskKind::kCopy:
    case tasks::TaskKind::kReverse:
      need_vocab = tasks::kFirstFree + 1;
      need_len = 4;
      break;
    case tasks::TaskKind::kMlmSynthetic:
      need_vocab = tasks::kFirstFree + 4;
      need_len = 9;
      break;
    case tasks::TaskKind::kKinship2Hop:
      need_vocab = tasks::kinship_vocab(c.n_entities);
      need_len = tasks::kinship_length(c.distractors);
      if (m.num_classes != tasks::kKinLabels) fail("kinship2hop needs num_classes = 7");
      break;
    case tasks::TaskKind::kPairClass:
      need_vocab = tasks::kFirstFree + 2;
      need_len = 5;
      if (m.num_classes != 2) fail("pairclass needs num_classes = 2");
      break;
  }
  if (m.vocab < need_vocab) {
    fail("task needs vocab >= " + std::to_string(need_vocab) + ", model has " +
         std::to_string(m.vocab));
  }
  if (c.seq_len < need_len) fail("task needs seq_len >= " + std::to_string(need_len));
  if (m.use_ape && m.max_len < c.seq_len) fail("max_len below seq_len with absolute positions");
}

std::vector<tasks::TaskExample> generate(const TrainConfig& c, RngState& rng, std::size_t n) {
  switch (c.task) {
    case tasks::TaskKind::kCopy: return tasks::gen_copy_task(rng, c.model.vocab, c.seq_len, n);
    case tasks::TaskKind::kReverse:
      return tasks::gen_reverse_task(rng, c.model.vocab, c.seq_len, n);
    case tasks::TaskKind::kMlmSynthetic:
      return tasks::gen_mlm_task(rng, tasks::Grammar::for_vocab(c.model.vocab), c.seq_len,
                                 c.mask_rate, n);
    case tasks::TaskKind::kKinship2Hop:
      return tasks::gen_kinship2hop(rng, c.n_entities, c.distractors, n);
    case tasks::TaskKind::kPairClass:
      return tasks::gen_pairclass(rng, c.model.vocab, c.seq_len, n);
  }
  return {};
}

BatchResult batch_loss(const TrainConfig& c, const model::ModelParams& params,
                       const std::vector<tasks::TaskExample>& examples,
                       const model::ForwardOptions& opts) {
  const std::size_t T = c.seq_len;
  auto batch = tasks::make_batch(examples, T);
  BatchResult r;
  const auto format = tasks::task_format(c.task);
  if (format == tasks::TaskFormat::kClassify) {
    auto [u, U] = model::model_forward(batch, params, c.model, nullptr, opts);
    auto logits = model::cls_logits(u, params);
    std::vector<int> labels;
    for (const auto& ex : examples) labels.push_back(ex.label);
    std::vector<double> w(labels.size(), 1.0);
    r.loss = cross_entropy(logits, labels, w);
    r.correct = count_hits(logits, labels);
    r.scored = labels.size();
    return r;
  }
  std::vector<int> pos, targets;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    for (std::size_t t = 0; t < ex.tokens.size(); ++t) {
      if (ex.loss_mask[t] == 0.0) continue;
      if (format == tasks::TaskFormat::kDecoder) {
        if (t == 0) continue;
        pos.push_back(static_cast<int>(i * T + t - 1));
        targets.push_back(ex.tokens[t]);
      } else {
        pos.push_back(static_cast<int>(i * T + t));
        targets.push_back(ex.targets[t]);
      }
    }
  }
  Tensor u;
  if (format == tasks::TaskFormat::kDecoder) {
    auto masks = build_masks(MaskMode::kCausal, T);
    u = text2text::decoder_forward(batch, params, c.model, masks, opts).first;
  } else {
    u = model::model_forward(batch, params, c.model, nullptr, opts).first;
  }
  if (pos.empty()) {
    r.loss = Tensor::scalar(0.0);
    return r;
  }
  auto logits = model::mlm_logits(u, pos, params, c.model);
  std::vector<double> w(pos.size(), 1.0);
  r.loss = cross_entropy(logits, targets, w);
  r.correct = count_hits(logits, targets);
  r.scored = targets.size();
  return r;
}

EvalReport evaluate(const TrainConfig& c, const model::ModelParams& params, std::size_t n,
                    std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("evaluate: empty evaluation set");
  check_compatible(c);
  RngState rng = RngState::derive(seed, kEvalStream);
  auto examples = generate(c, rng, n);
  EvalReport rep;
  rep.examples = n;
  double loss_sum = 0.0;
  const std::size_t bs = std::max<std::size_t>(c.batch_size, 1);
  for (std::size_t s = 0; s < n; s += bs) {
    std::vector<tasks::TaskExample> chunk(examples.begin() + static_cast<std::ptrdiff_t>(s),
                                          examples.begin() +
                                              static_cast<std::ptrdiff_t>(std::min(n, s + bs)));
    auto r = batch_loss(c, params, chunk);
    loss_sum += r.loss.item() * static_cast<double>(r.scored);
    rep.scored += r.scored;
    rep.accuracy += static_cast<double>(r.correct);
  }
  if (rep.scored == 0) throw std::invalid_argument("evaluate: no scored items in the evaluation set");
  rep.accuracy /= static_cast<double>(rep.scored);
  rep.loss = loss_sum / static_cast<double>(rep.scored);
  return rep;
}

EvalReport evaluate_checkpoint(const std::string& path, const TrainConfig& task_config,
                               std::size_t n, std::uint64_t seed) {
  auto [mc, params] = load_model(read_checkpoint(path));
  TrainConfig c = task_config;
  c.model = mc;
  return evaluate(c, params, n, seed);
}

TrainResult run_training(const TrainConfig& config, const std::string& resume_from) {
  config.validate();
  check_compatible(config);
  TrainResult out;
  out.checkpoint_path = resolve_checkpoint_path(config);
  std::size_t start = 0;
  std::optional<Checkpoint> resume;
  if (!resume_from.empty()) {
    resume = read_checkpoint(resume_from);
    const auto saved = TrainConfig::from_json(json::parse(resume->fields.at("train.config")));
    if (replay_identity(saved) != replay_identity(config)) {
      throw std::invalid_argument("resume: checkpoint was written by a different configuration");
    }
    out.params = load_model(*resume).second;
    start = std::stoul(resume->fields.at("train.step"));
  } else {
    RngState init = RngState::derive(config.seed, kInitStream);
    out.params = model::init_params(config.model, init);
  }
  auto named = out.params.named();
  optim::Adam adam(named, {config.adam_beta1, config.adam_beta2, config.adam_eps,
                           config.weight_decay});
  if (resume) {
    std::vector<Tensor> m, v;
    for (const auto& [name, t] : named) {
      m.push_back(resume->tensor("adam.m/" + name));
      v.push_back(resume->tensor("adam.v/" + name));
    }
    adam.load_state(m, v, std::stoul(resume->fields.at("adam.t")));
  }
  std::ofstream metrics;
  if (!config.metrics_path.empty()) {
    const auto dir = std::filesystem::path(config.metrics_path).parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    metrics.open(config.metrics_path, resume ? std::ios::app : std::ios::trunc);
    if (!metrics) throw std::runtime_error("cannot open metrics file " + config.metrics_path);
  }
  auto emit = [&](const json& rec) {
    if (metrics.is_open()) {
      metrics << rec.dump() << '\n';
      if (!metrics) throw std::runtime_error("write failed for " + config.metrics_path);
    }
  };
  const std::size_t total = config.steps;
  const std::size_t stop = config.stop_after ? config.stop_after : total;
  const std::size_t warmup = optim::warmup_steps(config.warmup_ratio, total);
  out.steps_done = start;
  for (std::size_t s = start; s < stop; ++s) {
    RngState data = RngState::derive(config.seed, kStepStreamBase + 2 * s);
    RngState drop = RngState::derive(config.seed, kStepStreamBase + 2 * s + 1);
    auto examples = generate(config, data, config.batch_size);
    for (auto& [name, t] : named) t.zero_grad();
    auto r = batch_loss(config, out.params, examples, {true, &drop});
    const double loss = r.loss.item();
    if (!std::isfinite(loss)) {
      throw std::runtime_error("non-finite loss " + std::to_string(loss) + " at step " +
                               std::to_string(s + 1) + " (lr " +
                               std::to_string(optim::linear_schedule(s + 1, total, warmup,
                                                                     config.peak_lr)) +
                               "); lower peak_lr or enable grad_clip");
    }
    r.loss.backward();
    const double gn = optim::clip_grad_norm(named, config.grad_clip);
    const double lr = optim::linear_schedule(s + 1, total, warmup, config.peak_lr);
    adam.step(lr);
    const std::size_t done = s + 1;
    out.steps_done = done;
    out.final_loss = loss;
    if (done % config.log_every == 0 || done == stop) {
      emit({{"kind", "train"},
            {"step", done},
            {"loss", loss},
            {"lr", lr},
            {"accuracy", r.scored ? double(r.correct) / double(r.scored) : 0.0},
            {"grad_norm", gn}});
    }
    const bool eval_now = (config.eval_every && done % config.eval_every == 0) || done == total;
    if (eval_now && config.eval_examples > 0) {
      auto ev = evaluate(config, out.params, config.eval_examples, config.seed);
      out.last_eval = ev;
      emit({{"kind", "eval"},
            {"step", done},
            {"loss", ev.loss},
            {"accuracy", ev.accuracy},
            {"examples", ev.examples}});
    }
    if (eval_now || done == stop) {
      write_train_checkpoint(out.checkpoint_path, config, out.params, adam, done);
    }
  }
  return out;
}

}  // namespace folnet::train
