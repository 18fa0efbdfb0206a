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

// Retrieval and zero-shot classification metrics, the T x T performance
// matrix, and its in-domain / backward / forward summaries.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tic/datagen.hpp"
#include "tic/model.hpp"

namespace tic {

// Row i of `queries` matches row i of `gallery`. Rows are assumed unit norm,
// so the dot product is the cosine. Ties go to the lowest gallery index.
double recall_at_1(const Matrix& queries, const Matrix& gallery);

// Image->text and text->image Recall@1 on aligned pairs.
struct RetrievalScores {
  double image_to_text = 0.0;
  double text_to_image = 0.0;
  double mean() const { return 0.5 * (image_to_text + text_to_image); }
};

RetrievalScores retrieval_scores(const TwoTowerParams& params,
                                 std::span<const PairRecord> records);

// Mean bidirectional Recall@1 over several retrieval sets.
double mean_retrieval(const TwoTowerParams& params,
                      std::span<const std::span<const PairRecord>> sets);

// Accuracy of argmax-cosine against class prototypes encoded by the text
// tower. Throws ConfigError when a record's class has no prototype.
double zero_shot_accuracy(const TwoTowerParams& params, std::span<const PairRecord> records,
                          const std::map<std::uint32_t, std::vector<double>>& prototypes);

// Forward MACs spent by the calls above.
std::uint64_t retrieval_eval_macs(const TwoTowerParams& params, std::size_t num_records);
std::uint64_t classification_eval_macs(const TwoTowerParams& params, std::size_t num_records,
                                       std::size_t num_prototypes);

enum class TaskKind { kRetrieval, kRetrievalI2T, kRetrievalT2I, kClassification };

std::string to_string(TaskKind task);
TaskKind task_kind_from_string(const std::string& s);
std::string metric_name(TaskKind task);
std::span<const TaskKind> all_tasks();

struct PerformanceMatrix {
  std::uint32_t num_steps = 0;
  TaskKind task = TaskKind::kRetrieval;
  // Row-major; entries[i * T + j] is the model after step i + 1 on step j + 1.
  std::vector<double> entries;

  double at(std::uint32_t i, std::uint32_t j) const { return entries.at(i * num_steps + j); }
  void validate() const;
  bool operator==(const PerformanceMatrix&) const = default;
};

struct EvalSummary {
  double in_domain = 0.0;
  std::optional<double> backward_transfer;  // mean over i > j
  std::optional<double> forward_transfer;   // mean over i < j
  bool operator==(const EvalSummary&) const = default;
};

// models[i] is the deployable model after step i + 1; eval_sets[j] holds the
// step j + 1 evaluation splits. Throws ProtocolError on a count mismatch.
PerformanceMatrix build_performance_matrix(std::span<const TwoTowerParams> models,
                                           std::span<const TimestepDataset> eval_sets,
                                           TaskKind task, std::uint64_t* eval_macs = nullptr);

EvalSummary summarize(const PerformanceMatrix& m);

// {T, task, metric, entries, in_domain, backward, forward}; absent summaries
// are null.
nlohmann::json matrix_to_json(const PerformanceMatrix& m);
PerformanceMatrix matrix_from_json(const nlohmann::json& j);
// "i,j,value" rows with 1-based step indices.
std::string matrix_to_csv(const PerformanceMatrix& m);

void to_json(nlohmann::json& j, const EvalSummary& s);
void from_json(const nlohmann::json& j, EvalSummary& s);

}  // namespace tic
