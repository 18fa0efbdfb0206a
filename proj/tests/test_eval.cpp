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

#include <numeric>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tic/eval.hpp"

namespace tic {
namespace {

using testing::linear_towers;
using testing::random_matrix;

// Linear scan over the gallery; strict > keeps the lowest index on ties.
double brute_force_recall(const Matrix& q, const Matrix& g) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    std::size_t best = 0;
    double best_sim = 0.0;
    for (std::size_t j = 0; j < g.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < q.cols(); ++k) s += q(i, k) * g(j, k);
      if (j == 0 || s > best_sim) {
        best = j;
        best_sim = s;
      }
    }
    hits += best == i;
  }
  return double(hits) / double(q.rows());
}

PerformanceMatrix make_matrix(std::uint32_t t, std::vector<double> e) {
  PerformanceMatrix m;
  m.num_steps = t;
  m.entries = std::move(e);
  return m;
}

PairRecord pair(std::vector<double> img, std::vector<double> txt, std::uint32_t cls = 0) {
  return {std::move(img), std::move(txt), cls, 1};
}

TEST(RecallAt1, BruteForceOracle) {
  Rng rng(17, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(64);
    const std::size_t d = 1 + rng.below(8);
    const Matrix q = l2_normalize_rows(random_matrix(n, d, rng));
    Matrix g = l2_normalize_rows(random_matrix(n, d, rng));
    // Plant near-matches and exact duplicates so both hits and ties occur.
    for (std::size_t i = 0; i < n; i += 3) std::copy(q.row(i).begin(), q.row(i).end(), g.row(i).begin());
    if (n > 4) std::copy(g.row(1).begin(), g.row(1).end(), g.row(4).begin());
    EXPECT_EQ(recall_at_1(q, g), brute_force_recall(q, g)) << "trial " << trial;
  }
}

TEST(RecallAt1, TiesGoToLowestIndex) {
  const Matrix q = Matrix::from_rows({{1, 0}, {1, 0}});
  const Matrix g = Matrix::from_rows({{1, 0}, {1, 0}});
  EXPECT_EQ(recall_at_1(q, g), 0.5);
  EXPECT_THROW(recall_at_1(q, Matrix(3, 2)), ShapeError);
}

TEST(Retrieval, IdentityModelScoresBothDirections) {
  const auto p = linear_towers(Matrix::identity(2), Matrix::identity(2), 0.0);
  const std::vector<PairRecord> recs = {pair({1, 0}, {1, 0.1}), pair({0, 1}, {0.1, 1})};
  const auto s = retrieval_scores(p, recs);
  EXPECT_EQ(s.image_to_text, 1.0);
  EXPECT_EQ(s.text_to_image, 1.0);
  // Image 1 is closest to text 0; text 1 still prefers image 1.
  const std::vector<PairRecord> skew = {pair({1, 0}, {1, 0}), pair({1, 0.2}, {0, 1})};
  const auto k = retrieval_scores(p, skew);
  EXPECT_EQ(k.image_to_text, 0.5);
  EXPECT_EQ(k.text_to_image, 1.0);
  EXPECT_EQ(k.mean(), 0.75);
  EXPECT_THROW(retrieval_scores(p, std::vector<PairRecord>{}), EmptyInputError);
}

TEST(ZeroShot, ArgmaxAgainstPrototypes) {
  const auto p = linear_towers(Matrix::identity(2), Matrix::identity(2), 0.0);
  const std::map<std::uint32_t, std::vector<double>> protos = {{3, {1, 0}}, {7, {0, 1}}};
  const std::vector<PairRecord> recs = {pair({2, 0.1}, {0, 0}, 3), pair({0.1, 2}, {0, 0}, 7),
                                        pair({1, 0}, {0, 0}, 7), pair({0, 1}, {0, 0}, 7)};
  EXPECT_EQ(zero_shot_accuracy(p, recs, protos), 0.75);
  const std::vector<PairRecord> orphan = {pair({1, 0}, {0, 0}, 5)};
  EXPECT_THROW(zero_shot_accuracy(p, orphan, protos), ConfigError);
  EXPECT_EQ(classification_eval_macs(p, 4, 2), 4u * 4 + 2u * 4);
  EXPECT_EQ(retrieval_eval_macs(p, 4), 4u * 8);
}

TEST(Summarize, HandExamples) {
  const auto id = summarize(make_matrix(2, {1, 0, 0, 1}));
  EXPECT_EQ(id.in_domain, 1.0);
  EXPECT_EQ(*id.backward_transfer, 0.0);
  EXPECT_EQ(*id.forward_transfer, 0.0);

  const auto s = summarize(make_matrix(3, {.1, .2, .3, .4, .5, .6, .7, .8, .9}));
  EXPECT_NEAR(s.in_domain, 0.5, 1e-15);
  EXPECT_NEAR(*s.backward_transfer, 1.9 / 3.0, 1e-15);
  EXPECT_NEAR(*s.forward_transfer, 1.1 / 3.0, 1e-15);

  const auto one = summarize(make_matrix(1, {0.25}));
  EXPECT_EQ(one.in_domain, 0.25);
  EXPECT_FALSE(one.backward_transfer);
  EXPECT_FALSE(one.forward_transfer);
}

TEST(Summarize, MatchesDirectAveraging) {
  Rng rng(23, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = static_cast<std::uint32_t>(1 + rng.below(9));
    std::vector<double> e(t * t);
    for (double& v : e) v = rng.uniform();
    std::vector<double> diag, lower, upper;
    for (std::uint32_t i = 0; i < t; ++i)
      for (std::uint32_t j = 0; j < t; ++j)
        (i == j ? diag : i > j ? lower : upper).push_back(e[i * t + j]);
    const auto mean = [](const std::vector<double>& v) {
      return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
    };
    const auto s = summarize(make_matrix(t, e));
    EXPECT_NEAR(s.in_domain, mean(diag), 1e-12);
    if (t > 1) {
      EXPECT_NEAR(*s.backward_transfer, mean(lower), 1e-12);
      EXPECT_NEAR(*s.forward_transfer, mean(upper), 1e-12);
    }
  }
}

TEST(PerformanceMatrixTest, ValidationAndSerialization) {
  EXPECT_THROW(make_matrix(2, {1, 0, 0}).validate(), ShapeError);
  EXPECT_THROW(make_matrix(1, {1.5}).validate(), NumericError);
  auto m = make_matrix(2, {0.5, 0.25, 0.125, 1.0 / 3.0});
  m.task = TaskKind::kClassification;
  const auto j = matrix_to_json(m);
  EXPECT_EQ(j.at("metric"), metric_name(TaskKind::kClassification));
  EXPECT_EQ(matrix_from_json(j), m);
  EXPECT_EQ(matrix_to_csv(m),
            "i,j,value\n1,1,0.5\n1,2,0.25\n2,1,0.125\n2,2,0.33333333333333331\n");
  EXPECT_TRUE(matrix_to_json(make_matrix(1, {0.5})).at("backward").is_null());
  for (TaskKind k : all_tasks()) EXPECT_EQ(task_kind_from_string(to_string(k)), k);
  EXPECT_THROW(task_kind_from_string("recall@5"), ConfigError);
}

TEST(PerformanceMatrixTest, BuildOverStream) {
  const auto cfg = testing::tiny_experiment(3);
  const auto stream = generate_stream(cfg.stream);
  const auto dims = cfg.model.dims(cfg.stream.image_dim, cfg.stream.text_dim);
  const std::vector<TwoTowerParams> models = {init_params(dims, 1), init_params(dims, 2),
                                              init_params(dims, 3)};
  std::uint64_t macs = 0;
  const auto m = build_performance_matrix(models, stream, TaskKind::kRetrieval, &macs);
  ASSERT_EQ(m.entries.size(), 9u);
  EXPECT_EQ(m.at(1, 2), retrieval_scores(models[1], stream[2].eval_retrieval).mean());
  EXPECT_EQ(macs, 9 * retrieval_eval_macs(models[0], cfg.stream.per_step_eval_size));
  const auto c = build_performance_matrix(models, stream, TaskKind::kClassification);
  EXPECT_EQ(c.at(0, 0), zero_shot_accuracy(models[0], stream[0].eval_classification,
                                           stream[0].class_prototypes));
  EXPECT_THROW(build_performance_matrix(std::span(models).first(2), stream, TaskKind::kRetrieval),
               ProtocolError);
}

}  // namespace
}  // namespace tic
