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

// Experiment orchestration: configuration, per-(method, seed) runs with
// on-disk checkpoints and manifests, the IID-split experiment and reports.
//
// A run directory looks like
//
//   <out>/<method>_seed<k>/manifest.json
//                         checkpoints/step_01.ckpt [step_01.cont.ckpt]
//                         metrics/<task>.json, metrics/<task>.csv
//
// and every path inside the manifest is relative to the run directory.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tic/datagen.hpp"
#include "tic/eval.hpp"
#include "tic/methods.hpp"
#include "tic/schedule.hpp"

namespace tic {

struct ModelConfig {
  std::size_t hidden_dim = 48;
  std::uint32_t hidden_layers = 1;
  std::size_t embed_dim = 16;

  ModelDims dims(std::size_t image_dim, std::size_t text_dim) const;
  bool operator==(const ModelConfig&) const = default;
};

struct IidSplitConfig {
  std::uint32_t train_size = 8192;
  std::uint32_t holdout_size = 1024;
  std::uint64_t total_iterations = 4000;
  std::vector<std::uint32_t> splits = {1, 2, 4, 8};
  bool operator==(const IidSplitConfig&) const = default;
};

struct ExperimentConfig {
  StreamConfig stream;
  std::uint32_t merge_first_k = 1;
  ScheduleConfig schedule;  // total_iters is derived per step
  ModelConfig model;
  std::uint64_t total_iterations = 4000;
  std::size_t batch_size = 256;
  std::vector<std::string> methods;  // defaults to every method
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  double lwf_lambda = 1.0;
  // Per-method budget multiplier for extra-compute runs.
  std::map<std::string, std::uint64_t> compute_multiplier;
  IidSplitConfig iid_split;

  ExperimentConfig();
  // Throws ConfigError.
  void validate() const;
  // T after merging the first merge_first_k steps.
  std::uint32_t effective_steps() const { return stream.num_steps - merge_first_k + 1; }
  TrainingSettings training_settings(MethodId method) const;

  bool operator==(const ExperimentConfig&) const = default;
};

void to_json(nlohmann::json& j, const ExperimentConfig& cfg);
void from_json(const nlohmann::json& j, ExperimentConfig& cfg);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

inline constexpr std::uint32_t kRunFormatVersion = 1;
inline constexpr const char* kRunManifestName = "manifest.json";

struct StepRecord {
  std::uint32_t step = 0;
  std::string checkpoint;
  std::optional<std::string> continuation;
  ReplayPlan plan;
  std::uint64_t training_set_size = 0;
  std::uint64_t iterations = 0;
  double final_clip_loss = 0.0;
  std::optional<double> alpha;
  double wall_clock_seconds = 0.0;
};

struct MetricFiles {
  std::string json;
  std::string csv;
};

struct RunManifest {
  std::uint32_t format_version = kRunFormatVersion;
  std::string method;
  std::uint64_t seed = 0;
  std::string status = "running";  // running | complete | failed
  std::string error;
  nlohmann::json config;  // full ExperimentConfig with defaults
  std::vector<StepRecord> steps;
  BudgetLedger ledger;
  std::vector<double> alphas;
  std::map<std::string, MetricFiles> metric_files;   // by task
  std::map<std::string, EvalSummary> summaries;      // by task
  std::vector<double> static_accuracy;               // per step
  std::optional<double> static_final;
  std::uint64_t eval_macs = 0;
  double wall_clock_seconds = 0.0;
};

void to_json(nlohmann::json& j, const RunManifest& m);
void from_json(const nlohmann::json& j, RunManifest& m);

// Parses the manifest and checks that every referenced file exists and
// parses. Throws FormatError / ConfigError.
RunManifest load_manifest(const std::filesystem::path& run_dir);

std::string run_dir_name(const std::string& method, std::uint64_t seed);

struct RunOptions {
  // Stop after this step, leaving a resumable partial run.
  std::optional<std::uint32_t> stop_after_step;
  // Continue from the completed steps of an existing run directory.
  bool resume = true;
};

// Trains all steps of one method, evaluates, and writes `run_dir`. A module
// error marks the manifest failed and is rethrown.
RunManifest run_method(const ExperimentConfig& cfg, const LoadedStream& stream,
                       const std::string& method, std::uint64_t seed,
                       const std::filesystem::path& run_dir, const RunOptions& options = {});

// Recomputes the metric files of a completed run from its checkpoints.
RunManifest evaluate_run(const std::filesystem::path& run_dir, const LoadedStream& stream);

// Every (method, seed) of `cfg` under `out_dir`, on a pool of at most
// `max_threads` workers (0 reads TIC_THREADS, defaulting to the core count).
std::vector<RunManifest> run_experiment(const ExperimentConfig& cfg, const LoadedStream& stream,
                                        const std::filesystem::path& out_dir,
                                        unsigned max_threads = 0);

unsigned thread_cap_from_env();

struct IidSplitRow {
  std::uint32_t splits = 1;
  std::vector<double> accuracy;  // per seed
  double mean_accuracy = 0.0;
};

// Cumulative-All over k IID chunks of one drift-free dataset, with the
// iteration budget split equally across chunks; k = 1 is the Oracle.
// Reports holdout zero-shot accuracy per k.
std::vector<IidSplitRow> iid_split_experiment(const ExperimentConfig& cfg,
                                              const std::vector<std::uint32_t>& splits,
                                              unsigned max_threads = 0);

nlohmann::json iid_split_to_json(const std::vector<IidSplitRow>& rows);

enum class ReportFormat { kCsv, kJson };

// One row per (method, seed, task, metric) plus ledger MAC totals. Throws
// ReportError naming an unreadable manifest.
std::string emit_report(const std::vector<std::filesystem::path>& run_dirs, ReportFormat format);

}  // namespace tic
