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

// Learning-rate schedules and MAC accounting.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tic/model.hpp"

namespace tic {

enum class ScheduleKind { kWarmupCosine, kConstCosine };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& s);

struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::kWarmupCosine;
  double max_lr = 3e-3;
  double min_lr = 0.0;
  std::uint64_t warmup_iters = 100;
  std::uint64_t total_iters = 1000;
  // Fraction of total_iters spent decaying (const_cosine only).
  double decay_fraction = 0.2;
  // Warmup length on warm-started runs, as a fraction of warmup_iters.
  double warmup_on_subsequent = 0.0;

  void validate() const;
  // Effective warmup length for a run.
  std::uint64_t warmup_for(bool is_first_step) const;
  // First iteration of the decay phase for const_cosine.
  std::uint64_t decay_start() const;

  bool operator==(const ScheduleConfig&) const = default;
};

void to_json(nlohmann::json& j, const ScheduleConfig& cfg);
void from_json(const nlohmann::json& j, ScheduleConfig& cfg);

// Linear warmup lr = max_lr * (iter + 1) / W, then either a cosine from
// max_lr to min_lr (warmup_cosine) or a constant max_lr followed by a cosine
// over the final decay_fraction of iterations (const_cosine). The cosine
// phase reaches min_lr exactly on the last iteration. Throws IndexError when
// iter >= total_iters.
double lr_at(const ScheduleConfig& cfg, std::uint64_t iter, bool is_first_step);

// floor(total_iters / T); the remainder goes to the final step.
std::uint64_t per_step_iterations(std::uint64_t total_iters, std::uint32_t num_steps);
// Iterations granted to 1-based `step` including the final-step remainder.
std::uint64_t iterations_for_step(std::uint64_t total_iters, std::uint32_t num_steps,
                                  std::uint32_t step);

// Forward MACs for one sample through one tower / both towers.
std::uint64_t tower_forward_macs(const TwoTowerParams& params, Tower tower);
std::uint64_t forward_macs_per_sample(const TwoTowerParams& params);
// 3 x forward x batch (backward counted as twice the forward pass).
std::uint64_t macs_per_iteration(const TwoTowerParams& params, std::uint64_t batch_size);

// T(T+1)/2: the Oracle's total budget in units of C.
std::uint64_t oracle_total_multiplier(std::uint32_t num_steps);

// Per-step MAC accounting against the budget C.
struct LedgerEntry {
  std::uint32_t step = 0;
  std::uint64_t budget_macs = 0;         // C for this step
  std::uint64_t allowed_multiplier = 1;  // training may use up to this many C
  std::uint64_t iterations = 0;
  std::uint64_t train_macs = 0;    // student forward+backward
  std::uint64_t teacher_macs = 0;  // frozen-teacher forward passes
  std::uint64_t branch_macs = 0;   // decay-branch share of train_macs
  std::uint64_t eval_macs = 0;     // evaluation and tuning forward passes

  std::uint64_t compute_macs() const { return train_macs + teacher_macs; }
  bool operator==(const LedgerEntry&) const = default;
};

void to_json(nlohmann::json& j, const LedgerEntry& e);
void from_json(const nlohmann::json& j, LedgerEntry& e);

class BudgetLedger {
 public:
  BudgetLedger() = default;
  BudgetLedger(std::uint64_t per_step_iters, std::uint64_t macs_per_iter)
      : per_step_iters_(per_step_iters), macs_per_iter_(macs_per_iter) {}

  void open_step(std::uint32_t step, std::uint64_t budget_macs,
                 std::uint64_t allowed_multiplier);
  // Throws LedgerError when training would exceed allowed_multiplier x C.
  void charge_training(std::uint64_t iterations, std::uint64_t macs_per_iter,
                       bool is_branch = false);
  void charge_teacher(std::uint64_t macs);
  void charge_eval(std::uint64_t macs);

  const std::vector<LedgerEntry>& entries() const { return entries_; }
  std::vector<LedgerEntry>& entries() { return entries_; }
  std::uint64_t per_step_iters() const { return per_step_iters_; }
  std::uint64_t macs_per_iter() const { return macs_per_iter_; }

  std::uint64_t total_train_macs() const;
  std::uint64_t total_compute_macs() const;
  std::uint64_t total_eval_macs() const;
  std::uint64_t total_budget_macs() const;

  bool operator==(const BudgetLedger&) const = default;

 private:
  LedgerEntry& current();

  std::uint64_t per_step_iters_ = 0;
  std::uint64_t macs_per_iter_ = 0;
  std::vector<LedgerEntry> entries_;
};

void to_json(nlohmann::json& j, const BudgetLedger& l);
void from_json(const nlohmann::json& j, BudgetLedger& l);

}  // namespace tic
