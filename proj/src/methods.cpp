// Copyright 2026 The TiC Stream Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tic/methods.hpp"

#include <algorithm>

#include "tic/eval.hpp"

namespace tic {

namespace {

constexpr std::uint64_t kShuffleTag = 0x53485546ULL;  // "SHUF"
constexpr std::size_t kLossWindow = 16;

constexpr std::array<MethodId, 8> kMethods = {
    MethodId::kOracle,     MethodId::kCumulativeAll, MethodId::kCumulativeExp,
    MethodId::kCumulativeEqual, MethodId::kSequential, MethodId::kRestart,
    MethodId::kPatching,   MethodId::kLwf};

}  // namespace

std::string to_string(MethodId id) {
  switch (id) {
    case MethodId::kOracle: return "oracle";
    case MethodId::kCumulativeAll: return "cumulative_all";
    case MethodId::kCumulativeExp: return "cumulative_exp";
    case MethodId::kCumulativeEqual: return "cumulative_equal";
    case MethodId::kSequential: return "sequential";
    case MethodId::kRestart: return "restart";
    case MethodId::kPatching: return "patching";
    case MethodId::kLwf: return "lwf";
  }
  return "?";
}

std::string to_string(InitSource s) {
  switch (s) {
    case InitSource::kRandom: return "random";
    case InitSource::kLastCheckpoint: return "last_checkpoint";
    case InitSource::kLastPatched: return "last_patched";
  }
  return "?";
}

std::string to_string(DataPolicy p) {
  switch (p) {
    case DataPolicy::kNewOnly: return "new_only";
    case DataPolicy::kAll: return "all";
    case DataPolicy::kBufferExp: return "buffer_exp";
    case DataPolicy::kBufferEqual: return "buffer_equal";
  }
  return "?";
}

MethodId method_from_string(const std::string& name) {
  for (MethodId id : kMethods) {
    if (to_string(id) == name) return id;
  }
  throw ConfigError("unknown method '" + name + "'");
}

std::span<const MethodId> all_methods() { return kMethods; }

MethodSpec resolve_method(MethodId id) {
  using enum InitSource;
  using enum DataPolicy;
  switch (id) {
    case MethodId::kOracle: return {id, kRandom, kAll, false};
    case MethodId::kCumulativeAll: return {id, kLastCheckpoint, kAll, false};
    case MethodId::kCumulativeExp: return {id, kLastCheckpoint, kBufferExp, false};
    case MethodId::kCumulativeEqual: return {id, kLastCheckpoint, kBufferEqual, false};
    case MethodId::kSequential: return {id, kLastCheckpoint, kNewOnly, false};
    case MethodId::kRestart: return {id, kRandom, kAll, false};
    case MethodId::kPatching: return {id, kLastPatched, kNewOnly, false};
    case MethodId::kLwf: return {id, kLastCheckpoint, kNewOnly, true};
  }
  throw ConfigError("unknown method id");
}

MethodSpec resolve_method(const std::string& name) {
  return resolve_method(method_from_string(name));
}

// ---------------------------------------------------------------------------

namespace {

void check_same_shapes(const std::vector<Layer>& a, const std::vector<Layer>& b) {
  if (a.size() != b.size()) throw ShapeError("patch: towers differ in depth");
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (a[l].weight.rows() != b[l].weight.rows() || a[l].weight.cols() != b[l].weight.cols() ||
        a[l].bias.size() != b[l].bias.size()) {
      throw ShapeError("patch: layer " + std::to_string(l) + " shapes differ");
    }
  }
}

}  // namespace

TwoTowerParams apply_patch(const TwoTowerParams& prev, const TwoTowerParams& next,
                           double alpha) {
  check_same_shapes(prev.image_layers, next.image_layers);
  check_same_shapes(prev.text_layers, next.text_layers);
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("patch alpha must lie in [0, 1]");
  if (alpha == 0.0) return prev;
  if (alpha == 1.0) return next;
  const std::vector<double> a = prev.flatten();
  const std::vector<double> b = next.flatten();
  std::vector<double> mixed(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) mixed[i] = (1.0 - alpha) * a[i] + alpha * b[i];
  TwoTowerParams out = next;
  out.unflatten(mixed);
  return out;
}

std::array<double, 11> patch_alpha_grid() {
  std::array<double, 11> grid{};
  for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = static_cast<double>(k) / 10.0;
  return grid;
}

AlphaChoice tune_patch_alpha(const TwoTowerParams& prev_patched, const TwoTowerParams& next,
                             std::span<const TimestepDataset> previous_steps) {
  if (previous_steps.empty()) throw ProtocolError("patch tuning needs a previous step");
  std::vector<std::span<const PairRecord>> sets;
  for (const auto& ds : previous_steps) sets.emplace_back(ds.eval_retrieval);
  AlphaChoice choice;
  double best = -1.0;
  for (double alpha : patch_alpha_grid()) {
    const TwoTowerParams mixed = apply_patch(prev_patched, next, alpha);
    const double score = mean_retrieval(mixed, sets);
    for (const auto& s : sets) choice.eval_macs += retrieval_eval_macs(mixed, s.size());
    choice.scores.push_back(score);
    if (score >= best) {
      best = score;
      choice.alpha = alpha;
    }
  }
  return choice;
}

// ---------------------------------------------------------------------------

void TrainingSettings::validate() const {
  dims.validate();
  if (num_steps < 1) throw ConfigError("num_steps must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (per_step_size < 1) throw ConfigError("per_step_size must be >= 1");
  if (compute_multiplier < 1) throw ConfigError("compute_multiplier must be >= 1");
  if (per_step_iterations(total_iterations, num_steps) < 1) {
    throw ConfigError("total_iterations must give every step at least one iteration");
  }
  if (!(lwf_lambda >= 0.0)) throw ConfigError("lwf_lambda must be >= 0");
  ScheduleConfig probe = schedule;
  probe.total_iters = std::max<std::uint64_t>(probe.warmup_iters, 1);
  probe.validate();
}

std::uint64_t step_iterations(const MethodSpec& spec, const TrainingSettings& settings,
                              std::uint32_t t) {
  std::uint64_t iters = 0;
  if (spec.id == MethodId::kOracle) {
    for (std::uint32_t s = 1; s <= t; ++s) {
      iters += iterations_for_step(settings.total_iterations, settings.num_steps, s);
    }
  } else {
    iters = iterations_for_step(settings.total_iterations, settings.num_steps, t);
  }
  return iters * settings.compute_multiplier;
}

namespace {

ReplayPlan make_plan(DataPolicy policy, std::uint32_t t,
                     std::span<const TimestepDataset> datasets, std::uint64_t d) {
  std::vector<std::uint64_t> sizes;
  for (std::uint32_t s = 0; s < t; ++s) sizes.push_back(datasets[s].train.size());
  switch (policy) {
    case DataPolicy::kNewOnly: {
      ReplayPlan plan = plan_replay(BufferPolicy::kAll, t, d, sizes);
      plan.per_source_counts.clear();
      return plan;
    }
    case DataPolicy::kAll: return plan_replay(BufferPolicy::kAll, t, d, sizes);
    case DataPolicy::kBufferExp: return plan_replay(BufferPolicy::kExp, t, d, sizes);
    case DataPolicy::kBufferEqual: return plan_replay(BufferPolicy::kEqual, t, d, sizes);
  }
  throw ConfigError("unknown data policy");
}

Checkpoint initial_checkpoint(const MethodSpec& spec, std::uint32_t t, const StepState* prev,
                              const TrainingSettings& settings, std::uint64_t seed) {
  if (t == 1 || spec.init_source == InitSource::kRandom) {
    return Checkpoint::fresh(init_params(settings.dims, seed), to_string(spec.id));
  }
  if (prev == nullptr) {
    throw ProtocolError(to_string(spec.id) + " step " + std::to_string(t) +
                        " needs the previous step's state");
  }
  Checkpoint ckpt = spec.init_source == InitSource::kLastCheckpoint && prev->continuation
                        ? *prev->continuation
                        : prev->checkpoint;
  if (spec.init_source == InitSource::kLastPatched && !prev->patch) {
    throw ProtocolError("patching step " + std::to_string(t) + " needs a patch state");
  }
  ckpt.method_id = to_string(spec.id);
  return ckpt;
}

}  // namespace

StepResult run_step(const MethodSpec& spec, std::uint32_t t,
                    std::span<const TimestepDataset> datasets, const StepState* prev,
                    const TrainingSettings& settings, BudgetLedger& ledger,
                    std::uint64_t seed) {
  if (t < 1 || t > settings.num_steps) throw IndexError("step outside [1, T]");
  if (datasets.size() < t) throw ProtocolError("datasets do not cover step " + std::to_string(t));

  StepResult result;
  Checkpoint ckpt = initial_checkpoint(spec, t, prev, settings, seed);
  const bool warm = t > 1 && spec.init_source != InitSource::kRandom;

  result.plan = make_plan(spec.data_policy, t, datasets, settings.per_step_size);
  Rng shuffle_rng(seed, derive_stream({kShuffleTag, t}));
  std::vector<RecordRef> training_set =
      assemble_training_set(sample_buffer(result.plan, datasets, seed),
                            sample_current(result.plan, datasets, seed), shuffle_rng);
  result.training_set_size = training_set.size();
  BatchStream batches(std::move(training_set), settings.batch_size, seed, t);

  const std::uint64_t iters = step_iterations(spec, settings, t);
  result.iterations = iters;
  ScheduleConfig sched = settings.schedule;
  sched.total_iters = iters;
  sched.validate();

  const std::uint64_t budget =
      iterations_for_step(settings.total_iterations, settings.num_steps, t) *
      macs_per_iteration(ckpt.params, settings.batch_size);
  ledger.open_step(t, budget, spec.compute_multiplier_at(t) * settings.compute_multiplier);
  const std::uint64_t mpi = macs_per_iteration(ckpt.params, batches.batch_size());

  // Const-cosine warm-start chains pause before the decay and finish the
  // decay on a branch; the next step resumes from the pause point.
  const bool branch = sched.kind == ScheduleKind::kConstCosine &&
                      spec.init_source == InitSource::kLastCheckpoint;
  const std::uint64_t pause = branch ? std::max(sched.decay_start(), sched.warmup_for(!warm))
                                     : iters;
  ledger.charge_training(pause, mpi, false);
  if (iters > pause) ledger.charge_training(iters - pause, mpi, true);

  std::optional<TwoTowerParams> teacher_params;
  if (spec.uses_lwf && t > 1) {
    teacher_params = prev->checkpoint.params;
    ledger.charge_teacher(iters * forward_macs_per_sample(*teacher_params) *
                          batches.batch_size());
  }
  std::optional<LwfTeacher> teacher;
  if (teacher_params) teacher = LwfTeacher{&*teacher_params, settings.lwf_lambda};

  std::vector<double> recent;
  for (std::uint64_t it = 0; it < iters; ++it) {
    if (branch && it == pause) result.state.continuation = ckpt;
    const auto [img, txt] = gather_batch(datasets, batches.next());
    const MinibatchRecord rec =
        train_minibatch(ckpt, img, txt, lr_at(sched, it, !warm), teacher);
    if (iters - it <= kLossWindow) recent.push_back(rec.clip_loss);
  }
  if (branch && !result.state.continuation) result.state.continuation = ckpt;
  double loss_sum = 0.0;
  for (double l : recent) loss_sum += l;
  result.final_clip_loss = recent.empty() ? 0.0 : loss_sum / static_cast<double>(recent.size());

  ckpt.trained_through_step = t;
  if (result.state.continuation) result.state.continuation->trained_through_step = t;

  if (spec.init_source == InitSource::kLastPatched) {
    PatchState patch;
    if (t == 1) {
      patch.patched_params = ckpt.params;
    } else {
      const AlphaChoice choice =
          tune_patch_alpha(prev->patch->patched_params, ckpt.params, datasets.first(t - 1));
      ledger.charge_eval(choice.eval_macs);
      patch.patched_params = apply_patch(prev->patch->patched_params, ckpt.params, choice.alpha);
      patch.alpha_history = prev->patch->alpha_history;
      patch.alpha_history.push_back(choice.alpha);
      result.alpha = choice.alpha;
      ckpt.params = patch.patched_params;
    }
    result.state.patch = std::move(patch);
  }
  result.state.checkpoint = std::move(ckpt);
  return result;
}

}  // namespace tic
