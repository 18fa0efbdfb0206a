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

// The continual-training methods and the per-step training driver.
//
//   method            init          data                compute at step t
//   oracle            random        all steps in full   t x C
//   cumulative_all    last ckpt     all steps in full   C
//   cumulative_exp    last ckpt     new + exp buffer    C
//   cumulative_equal  last ckpt     new + equal buffer  C
//   sequential        last ckpt     new only            C
//   restart           random        all steps in full   C
//   patching          last patched  new only            C
//   lwf               last ckpt     new only            C + teacher forward

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tic/datagen.hpp"
#include "tic/model.hpp"
#include "tic/replay.hpp"
#include "tic/schedule.hpp"

namespace tic {

enum class MethodId {
  kOracle,
  kCumulativeAll,
  kCumulativeExp,
  kCumulativeEqual,
  kSequential,
  kRestart,
  kPatching,
  kLwf,
};

enum class InitSource { kRandom, kLastCheckpoint, kLastPatched };
enum class DataPolicy { kNewOnly, kAll, kBufferExp, kBufferEqual };

std::string to_string(MethodId id);
std::string to_string(InitSource s);
std::string to_string(DataPolicy p);
// Throws ConfigError for an unknown name.
MethodId method_from_string(const std::string& name);
std::span<const MethodId> all_methods();

struct MethodSpec {
  MethodId id = MethodId::kSequential;
  InitSource init_source = InitSource::kLastCheckpoint;
  DataPolicy data_policy = DataPolicy::kNewOnly;
  bool uses_lwf = false;

  // Training budget at step t in units of C.
  std::uint64_t compute_multiplier_at(std::uint32_t t) const {
    return id == MethodId::kOracle ? t : 1;
  }
  bool operator==(const MethodSpec&) const = default;
};

MethodSpec resolve_method(MethodId id);
MethodSpec resolve_method(const std::string& name);

struct PatchState {
  TwoTowerParams patched_params;
  std::vector<double> alpha_history;  // one entry per step t >= 2
};

// (1 - alpha) * prev + alpha * next over every weight, bias and log_scale.
// alpha = 0 and alpha = 1 return an exact copy of one side.
TwoTowerParams apply_patch(const TwoTowerParams& prev, const TwoTowerParams& next,
                           double alpha);

// 0.0, 0.1, ..., 1.0.
std::array<double, 11> patch_alpha_grid();

struct AlphaChoice {
  double alpha = 1.0;
  std::vector<double> scores;  // mean Recall@1 per grid point
  std::uint64_t eval_macs = 0;
};

// Maximizes mean bidirectional Recall@1 over the retrieval sets of
// `previous_steps`; ties go to the larger alpha.
AlphaChoice tune_patch_alpha(const TwoTowerParams& prev_patched, const TwoTowerParams& next,
                             std::span<const TimestepDataset> previous_steps);

struct TrainingSettings {
  ModelDims dims;
  // total_iters is replaced per step.
  ScheduleConfig schedule;
  // Iterations of a 1 x C method over all steps.
  std::uint64_t total_iterations = 4000;
  std::uint32_t num_steps = 1;
  std::size_t batch_size = 256;
  // D: the per-step data size used by the buffer policies.
  std::uint64_t per_step_size = 2048;
  double lwf_lambda = 1.0;
  // Scales both the iterations and the allowance of every step.
  std::uint64_t compute_multiplier = 1;

  void validate() const;
};

// Iterations run at step t.
std::uint64_t step_iterations(const MethodSpec& spec, const TrainingSettings& settings,
                              std::uint32_t t);

// What one step hands to the next.
struct StepState {
  // Deployable model after the step. For patching this holds the patched
  // weights with the optimizer state of the trained model.
  Checkpoint checkpoint;
  // Pre-decay state of a const_cosine run; warm starts resume from it.
  std::optional<Checkpoint> continuation;
  std::optional<PatchState> patch;
};

struct StepResult {
  StepState state;
  ReplayPlan plan;
  std::uint64_t training_set_size = 0;
  std::uint64_t iterations = 0;
  // Mean contrastive loss over the last few minibatches.
  double final_clip_loss = 0.0;
  std::optional<double> alpha;
};

// Trains step t (1-based) of `spec`. `datasets` must cover steps 1..t; `prev`
// is required when t >= 2. Sampling and initialization depend only on
// (seed, t), so all methods coincide at t = 1. Throws ProtocolError on a
// missing `prev` and LedgerError on a budget overrun.
StepResult run_step(const MethodSpec& spec, std::uint32_t t,
                    std::span<const TimestepDataset> datasets, const StepState* prev,
                    const TrainingSettings& settings, BudgetLedger& ledger,
                    std::uint64_t seed);

}  // namespace tic
