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

#include "tic/schedule.hpp"

#include <cmath>
#include <numbers>

#include "tic/json_util.hpp"

namespace tic {

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::kWarmupCosine ? "warmup_cosine" : "const_cosine";
}

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "warmup_cosine") return ScheduleKind::kWarmupCosine;
  if (s == "const_cosine") return ScheduleKind::kConstCosine;
  throw ConfigError("unknown schedule kind '" + s + "'");
}

void ScheduleConfig::validate() const {
  if (total_iters < 1) throw ConfigError("schedule total_iters must be >= 1");
  if (warmup_iters > total_iters) throw ConfigError("warmup_iters exceeds total_iters");
  if (!(min_lr >= 0.0 && max_lr >= min_lr)) {
    throw ConfigError("schedule needs max_lr >= min_lr >= 0");
  }
  if (!(decay_fraction > 0.0 && decay_fraction <= 1.0)) {
    throw ConfigError("decay_fraction must lie in (0, 1]");
  }
  if (!(warmup_on_subsequent >= 0.0 && warmup_on_subsequent <= 1.0)) {
    throw ConfigError("warmup_on_subsequent must lie in [0, 1]");
  }
}

std::uint64_t ScheduleConfig::warmup_for(bool is_first_step) const {
  if (is_first_step) return warmup_iters;
  return static_cast<std::uint64_t>(
      std::llround(warmup_on_subsequent * static_cast<double>(warmup_iters)));
}

std::uint64_t ScheduleConfig::decay_start() const {
  const auto decay_len = static_cast<std::uint64_t>(
      std::llround(decay_fraction * static_cast<double>(total_iters)));
  return total_iters - std::min(decay_len, total_iters);
}

void to_json(nlohmann::json& j, const ScheduleConfig& cfg) {
  j = nlohmann::json{{"kind", to_string(cfg.kind)},
                     {"max_lr", cfg.max_lr},
                     {"min_lr", cfg.min_lr},
                     {"warmup_iters", cfg.warmup_iters},
                     {"total_iters", cfg.total_iters},
                     {"decay_fraction", cfg.decay_fraction},
                     {"warmup_on_subsequent", cfg.warmup_on_subsequent}};
}

void from_json(const nlohmann::json& j, ScheduleConfig& cfg) {
  json_util::ObjectReader r(j, "schedule");
  std::string kind = to_string(cfg.kind);
  r.get("kind", kind);
  cfg.kind = schedule_kind_from_string(kind);
  r.get("max_lr", cfg.max_lr);
  r.get("min_lr", cfg.min_lr);
  r.get("warmup_iters", cfg.warmup_iters);
  r.get("total_iters", cfg.total_iters);
  r.get("decay_fraction", cfg.decay_fraction);
  r.get("warmup_on_subsequent", cfg.warmup_on_subsequent);
  r.finish();
}

namespace {

// Cosine from max_lr at `start` down to min_lr at the last iteration.
double cosine_phase(const ScheduleConfig& cfg, std::uint64_t iter, std::uint64_t start) {
  const std::uint64_t last = cfg.total_iters - 1;
  const double p = last > start ? static_cast<double>(iter - start) /
                                      static_cast<double>(last - start)
                                : 1.0;
  return cfg.min_lr +
         0.5 * (cfg.max_lr - cfg.min_lr) * (1.0 + std::cos(std::numbers::pi * p));
}

}  // namespace

double lr_at(const ScheduleConfig& cfg, std::uint64_t iter, bool is_first_step) {
  if (iter >= cfg.total_iters) {
    throw IndexError("lr_at: iteration " + std::to_string(iter) + " outside [0, " +
                     std::to_string(cfg.total_iters) + ")");
  }
  const std::uint64_t warmup = cfg.warmup_for(is_first_step);
  if (iter < warmup) {
    return cfg.max_lr * static_cast<double>(iter + 1) / static_cast<double>(warmup);
  }
  if (cfg.kind == ScheduleKind::kWarmupCosine) return cosine_phase(cfg, iter, warmup);
  const std::uint64_t decay = std::max(cfg.decay_start(), warmup);
  if (iter < decay) return cfg.max_lr;
  return cosine_phase(cfg, iter, decay);
}

std::uint64_t per_step_iterations(std::uint64_t total_iters, std::uint32_t num_steps) {
  if (num_steps < 1) throw ConfigError("per_step_iterations: T must be >= 1");
  return total_iters / num_steps;
}

std::uint64_t iterations_for_step(std::uint64_t total_iters, std::uint32_t num_steps,
                                  std::uint32_t step) {
  const std::uint64_t base = per_step_iterations(total_iters, num_steps);
  if (step < 1 || step > num_steps) throw IndexError("step outside [1, T]");
  return step == num_steps ? base + total_iters % num_steps : base;
}

std::uint64_t tower_forward_macs(const TwoTowerParams& params, Tower tower) {
  std::uint64_t macs = 0;
  for (const auto& l : params.tower(tower)) macs += l.weight.rows() * l.weight.cols();
  return macs;
}

std::uint64_t forward_macs_per_sample(const TwoTowerParams& params) {
  return tower_forward_macs(params, Tower::kImage) + tower_forward_macs(params, Tower::kText);
}

std::uint64_t macs_per_iteration(const TwoTowerParams& params, std::uint64_t batch_size) {
  return 3 * forward_macs_per_sample(params) * batch_size;
}

std::uint64_t oracle_total_multiplier(std::uint32_t num_steps) {
  if (num_steps < 1) throw ConfigError("oracle_total_multiplier: T must be >= 1");
  const std::uint64_t t = num_steps;
  return t * (t + 1) / 2;
}

// ---------------------------------------------------------------------------

void BudgetLedger::open_step(std::uint32_t step, std::uint64_t budget_macs,
                             std::uint64_t allowed_multiplier) {
  LedgerEntry e;
  e.step = step;
  e.budget_macs = budget_macs;
  e.allowed_multiplier = allowed_multiplier;
  entries_.push_back(e);
}

LedgerEntry& BudgetLedger::current() {
  if (entries_.empty()) throw ProtocolError("ledger: no open step");
  return entries_.back();
}

void BudgetLedger::charge_training(std::uint64_t iterations, std::uint64_t macs_per_iter,
                                   bool is_branch) {
  LedgerEntry& e = current();
  const std::uint64_t macs = iterations * macs_per_iter;
  if (e.train_macs + macs > e.allowed_multiplier * e.budget_macs) {
    throw LedgerError("step " + std::to_string(e.step) + ": training would use " +
                      std::to_string(e.train_macs + macs) + " MACs, budget is " +
                      std::to_string(e.allowed_multiplier) + " x " +
                      std::to_string(e.budget_macs));
  }
  e.iterations += iterations;
  e.train_macs += macs;
  if (is_branch) e.branch_macs += macs;
}

void BudgetLedger::charge_teacher(std::uint64_t macs) { current().teacher_macs += macs; }

void BudgetLedger::charge_eval(std::uint64_t macs) { current().eval_macs += macs; }

std::uint64_t BudgetLedger::total_train_macs() const {
  std::uint64_t s = 0;
  for (const auto& e : entries_) s += e.train_macs;
  return s;
}

std::uint64_t BudgetLedger::total_compute_macs() const {
  std::uint64_t s = 0;
  for (const auto& e : entries_) s += e.compute_macs();
  return s;
}

std::uint64_t BudgetLedger::total_eval_macs() const {
  std::uint64_t s = 0;
  for (const auto& e : entries_) s += e.eval_macs;
  return s;
}

std::uint64_t BudgetLedger::total_budget_macs() const {
  std::uint64_t s = 0;
  for (const auto& e : entries_) s += e.budget_macs;
  return s;
}

void to_json(nlohmann::json& j, const LedgerEntry& e) {
  j = nlohmann::json{{"step", e.step},
                     {"budget_macs", e.budget_macs},
                     {"allowed_multiplier", e.allowed_multiplier},
                     {"iterations", e.iterations},
                     {"train_macs", e.train_macs},
                     {"teacher_macs", e.teacher_macs},
                     {"branch_macs", e.branch_macs},
                     {"eval_macs", e.eval_macs}};
}

void from_json(const nlohmann::json& j, LedgerEntry& e) {
  e.step = j.at("step").get<std::uint32_t>();
  e.budget_macs = j.at("budget_macs").get<std::uint64_t>();
  e.allowed_multiplier = j.at("allowed_multiplier").get<std::uint64_t>();
  e.iterations = j.at("iterations").get<std::uint64_t>();
  e.train_macs = j.at("train_macs").get<std::uint64_t>();
  e.teacher_macs = j.at("teacher_macs").get<std::uint64_t>();
  e.branch_macs = j.at("branch_macs").get<std::uint64_t>();
  e.eval_macs = j.at("eval_macs").get<std::uint64_t>();
}

void to_json(nlohmann::json& j, const BudgetLedger& l) {
  j = nlohmann::json{{"per_step_iters", l.per_step_iters()},
                     {"macs_per_iter", l.macs_per_iter()},
                     {"steps", l.entries()},
                     {"total_train_macs", l.total_train_macs()},
                     {"total_compute_macs", l.total_compute_macs()},
                     {"total_eval_macs", l.total_eval_macs()},
                     {"total_budget_macs", l.total_budget_macs()}};
}

void from_json(const nlohmann::json& j, BudgetLedger& l) {
  l = BudgetLedger(j.at("per_step_iters").get<std::uint64_t>(),
                   j.at("macs_per_iter").get<std::uint64_t>());
  l.entries() = j.at("steps").get<std::vector<LedgerEntry>>();
}

}  // namespace tic
