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

#include "tic/eval.hpp"

#include <array>
#include <cstdio>

#include "tic/schedule.hpp"

namespace tic {

namespace {

Matrix stack(std::span<const PairRecord> records, bool image) {
  const std::size_t dim = image ? records[0].image_vec.size() : records[0].text_vec.size();
  Matrix m(records.size(), dim);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& v = image ? records[i].image_vec : records[i].text_vec;
    if (v.size() != dim) throw ShapeError("records have different dimensions");
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

// Row-wise argmax of queries * gallery^T with ties to the lowest index.
std::vector<std::size_t> nearest(const Matrix& queries, const Matrix& gallery) {
  const Matrix sims = matmul_bt(queries, gallery);
  std::vector<std::size_t> best(sims.rows(), 0);
  for (std::size_t i = 0; i < sims.rows(); ++i) {
    const auto row = sims.row(i);
    for (std::size_t j = 1; j < row.size(); ++j) {
      if (row[j] > row[best[i]]) best[i] = j;
    }
  }
  return best;
}

double recall_from_nearest(const std::vector<std::size_t>& best) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < best.size(); ++i) hits += best[i] == i ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(best.size());
}

}  // namespace

double recall_at_1(const Matrix& queries, const Matrix& gallery) {
  if (queries.rows() != gallery.rows() || queries.cols() != gallery.cols()) {
    throw ShapeError("recall_at_1: queries and gallery must have the same shape");
  }
  return recall_from_nearest(nearest(queries, gallery));
}

RetrievalScores retrieval_scores(const TwoTowerParams& params,
                                 std::span<const PairRecord> records) {
  if (records.empty()) throw EmptyInputError("retrieval set is empty");
  const Matrix u = encode(params, stack(records, true), Tower::kImage);
  const Matrix v = encode(params, stack(records, false), Tower::kText);
  return {recall_at_1(u, v), recall_at_1(v, u)};
}

double mean_retrieval(const TwoTowerParams& params,
                      std::span<const std::span<const PairRecord>> sets) {
  if (sets.empty()) throw EmptyInputError("no retrieval sets");
  double sum = 0.0;
  for (const auto& s : sets) sum += retrieval_scores(params, s).mean();
  return sum / static_cast<double>(sets.size());
}

double zero_shot_accuracy(const TwoTowerParams& params, std::span<const PairRecord> records,
                          const std::map<std::uint32_t, std::vector<double>>& prototypes) {
  if (records.empty()) throw EmptyInputError("classification set is empty");
  if (prototypes.empty()) throw ConfigError("no class prototypes");
  std::vector<std::uint32_t> class_ids;
  Matrix protos(prototypes.size(), prototypes.begin()->second.size());
  std::size_t r = 0;
  for (const auto& [id, vec] : prototypes) {
    if (vec.size() != protos.cols()) throw ShapeError("prototypes have different dimensions");
    class_ids.push_back(id);
    std::copy(vec.begin(), vec.end(), protos.row(r++).begin());
  }
  for (const auto& rec : records) {
    if (!prototypes.count(rec.class_id)) {
      throw ConfigError("no prototype for class " + std::to_string(rec.class_id));
    }
  }
  const Matrix u = encode(params, stack(records, true), Tower::kImage);
  const Matrix p = encode(params, protos, Tower::kText);
  const auto best = nearest(u, p);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    hits += class_ids[best[i]] == records[i].class_id ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

std::uint64_t retrieval_eval_macs(const TwoTowerParams& params, std::size_t num_records) {
  return forward_macs_per_sample(params) * num_records;
}

std::uint64_t classification_eval_macs(const TwoTowerParams& params, std::size_t num_records,
                                       std::size_t num_prototypes) {
  return tower_forward_macs(params, Tower::kImage) * num_records +
         tower_forward_macs(params, Tower::kText) * num_prototypes;
}

// ---------------------------------------------------------------------------

std::string to_string(TaskKind task) {
  switch (task) {
    case TaskKind::kRetrieval: return "retrieval";
    case TaskKind::kRetrievalI2T: return "retrieval_i2t";
    case TaskKind::kRetrievalT2I: return "retrieval_t2i";
    case TaskKind::kClassification: return "classification";
  }
  return "?";
}

TaskKind task_kind_from_string(const std::string& s) {
  for (TaskKind t : all_tasks()) {
    if (to_string(t) == s) return t;
  }
  throw ConfigError("unknown task '" + s + "'");
}

std::string metric_name(TaskKind task) {
  return task == TaskKind::kClassification ? "accuracy" : "recall_at_1";
}

std::span<const TaskKind> all_tasks() {
  static constexpr std::array<TaskKind, 4> kTasks = {
      TaskKind::kRetrieval, TaskKind::kRetrievalI2T, TaskKind::kRetrievalT2I,
      TaskKind::kClassification};
  return kTasks;
}

void PerformanceMatrix::validate() const {
  if (num_steps < 1) throw ProtocolError("performance matrix needs T >= 1");
  if (entries.size() != static_cast<std::size_t>(num_steps) * num_steps) {
    throw ShapeError("performance matrix has " + std::to_string(entries.size()) +
                     " entries, expected T^2 = " +
                     std::to_string(static_cast<std::size_t>(num_steps) * num_steps));
  }
  for (double e : entries) {
    if (!(e >= 0.0 && e <= 1.0)) throw NumericError("performance entry outside [0, 1]");
  }
}

PerformanceMatrix build_performance_matrix(std::span<const TwoTowerParams> models,
                                           std::span<const TimestepDataset> eval_sets,
                                           TaskKind task, std::uint64_t* eval_macs) {
  if (models.empty() || models.size() != eval_sets.size()) {
    throw ProtocolError("performance matrix needs one model per eval set, got " +
                        std::to_string(models.size()) + " models and " +
                        std::to_string(eval_sets.size()) + " eval sets");
  }
  PerformanceMatrix m;
  m.num_steps = static_cast<std::uint32_t>(models.size());
  m.task = task;
  m.entries.reserve(models.size() * models.size());
  std::uint64_t macs = 0;
  for (const auto& model : models) {
    for (const auto& ds : eval_sets) {
      double value = 0.0;
      if (task == TaskKind::kClassification) {
        value = zero_shot_accuracy(model, ds.eval_classification, ds.class_prototypes);
        macs += classification_eval_macs(model, ds.eval_classification.size(),
                                         ds.class_prototypes.size());
      } else {
        const RetrievalScores s = retrieval_scores(model, ds.eval_retrieval);
        value = task == TaskKind::kRetrieval      ? s.mean()
                : task == TaskKind::kRetrievalI2T ? s.image_to_text
                                                  : s.text_to_image;
        macs += retrieval_eval_macs(model, ds.eval_retrieval.size());
      }
      m.entries.push_back(value);
    }
  }
  if (eval_macs != nullptr) *eval_macs += macs;
  return m;
}

EvalSummary summarize(const PerformanceMatrix& m) {
  m.validate();
  const std::uint32_t t = m.num_steps;
  double diag = 0.0, lower = 0.0, upper = 0.0;
  for (std::uint32_t i = 0; i < t; ++i) {
    for (std::uint32_t j = 0; j < t; ++j) {
      const double e = m.at(i, j);
      if (i == j) diag += e;
      else if (i > j) lower += e;
      else upper += e;
    }
  }
  EvalSummary s;
  s.in_domain = diag / t;
  if (t > 1) {
    const double pairs = 0.5 * t * (t - 1);
    s.backward_transfer = lower / pairs;
    s.forward_transfer = upper / pairs;
  }
  return s;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

void to_json(nlohmann::json& j, const EvalSummary& s) {
  j = nlohmann::json{{"in_domain", s.in_domain},
                     {"backward", optional_json(s.backward_transfer)},
                     {"forward", optional_json(s.forward_transfer)}};
}

void from_json(const nlohmann::json& j, EvalSummary& s) {
  s.in_domain = j.at("in_domain").get<double>();
  s.backward_transfer = optional_from(j.at("backward"));
  s.forward_transfer = optional_from(j.at("forward"));
}

nlohmann::json matrix_to_json(const PerformanceMatrix& m) {
  const EvalSummary s = summarize(m);
  return nlohmann::json{{"T", m.num_steps},
                        {"task", to_string(m.task)},
                        {"metric", metric_name(m.task)},
                        {"entries", m.entries},
                        {"in_domain", s.in_domain},
                        {"backward", optional_json(s.backward_transfer)},
                        {"forward", optional_json(s.forward_transfer)}};
}

PerformanceMatrix matrix_from_json(const nlohmann::json& j) {
  PerformanceMatrix m;
  try {
    m.num_steps = j.at("T").get<std::uint32_t>();
    m.task = task_kind_from_string(j.at("task").get<std::string>());
    m.entries = j.at("entries").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("performance matrix: ") + e.what());
  }
  m.validate();
  return m;
}

std::string matrix_to_csv(const PerformanceMatrix& m) {
  std::string out = "i,j,value\n";
  char buf[64];
  for (std::uint32_t i = 0; i < m.num_steps; ++i) {
    for (std::uint32_t j = 0; j < m.num_steps; ++j) {
      std::snprintf(buf, sizeof buf, "%u,%u,%.17g\n", i + 1, j + 1, m.at(i, j));
      out += buf;
    }
  }
  return out;
}

}  // namespace tic
