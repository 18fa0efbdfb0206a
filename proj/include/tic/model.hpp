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

// Two-tower MLP encoders trained with the symmetric contrastive objective.
//
// Each tower is a chain of affine layers with tanh between them (none after
// the last), followed by row L2 normalization. Similarity logits are
// exp(log_scale) * U V^T for image embeddings U and text embeddings V.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tic/numerics.hpp"

namespace tic {

enum class Tower { kImage, kText };

struct Layer {
  Matrix weight;  // fan_in x fan_out; forward is x * W + b
  std::vector<double> bias;

  bool operator==(const Layer&) const = default;
};

struct TwoTowerParams {
  std::vector<Layer> image_layers;
  std::vector<Layer> text_layers;
  double log_scale = 0.0;

  const std::vector<Layer>& tower(Tower t) const {
    return t == Tower::kImage ? image_layers : text_layers;
  }
  std::vector<Layer>& tower(Tower t) {
    return t == Tower::kImage ? image_layers : text_layers;
  }
  std::size_t embed_dim() const { return image_layers.back().weight.cols(); }

  std::size_t num_params() const;
  // Fixed packing order: image layers (weight row-major, then bias), text
  // layers, then log_scale.
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);
  TwoTowerParams zeros_like() const;

  bool operator==(const TwoTowerParams&) const = default;
};

// Layer widths per tower, input first. Both towers must end at the same
// embedding width.
struct ModelDims {
  std::vector<std::size_t> image_widths;
  std::vector<std::size_t> text_widths;

  static ModelDims two_layer(std::size_t image_dim, std::size_t text_dim,
                             std::size_t hidden_dim, std::size_t embed_dim) {
    return {{image_dim, hidden_dim, embed_dim}, {text_dim, hidden_dim, embed_dim}};
  }
  void validate() const;
};

// ln(1 / 0.07), the customary CLIP initial inverse temperature.
inline constexpr double kInitLogScale = 2.6592600369327779;
// Largest double below ln(100) whose exp does not exceed 100.
inline constexpr double kMaxLogScale = 4.605170185988091;

// Glorot-uniform weights, zero biases, log_scale = ln(1/0.07).
TwoTowerParams init_params(const ModelDims& dims, std::uint64_t seed);

// Tower forward pass with row-normalized output.
Matrix encode(const TwoTowerParams& params, const Matrix& inputs, Tower tower);

struct LossAndGrads {
  double loss = 0.0;
  TwoTowerParams grads;
};

// Symmetric InfoNCE with diagonal targets, averaged over both directions.
LossAndGrads clip_loss_and_grads(const TwoTowerParams& params,
                                 const Matrix& image_batch,
                                 const Matrix& text_batch);

// lambda * 1/2 * (mean_i KL(p_teacher_row_i || p_student_row_i) +
//                 mean_j KL(p_teacher_col_j || p_student_col_j)).
// Gradients are with respect to the student only.
LossAndGrads lwf_penalty_and_grads(const TwoTowerParams& teacher,
                                   const TwoTowerParams& student,
                                   const Matrix& image_batch,
                                   const Matrix& text_batch, double lambda);

struct Checkpoint {
  TwoTowerParams params;
  AdamState adam;
  std::uint64_t global_step = 0;
  std::uint32_t trained_through_step = 0;
  std::string method_id;

  // Fresh optimizer state sized to `params`.
  static Checkpoint fresh(TwoTowerParams params, std::string method_id);

  bool operator==(const Checkpoint&) const = default;
};

struct LwfTeacher {
  const TwoTowerParams* params = nullptr;
  double lambda = 1.0;
};

struct MinibatchRecord {
  double clip_loss = 0.0;
  double lwf_penalty = 0.0;
  double lr = 0.0;
};

// One forward/backward/Adam step, then the log_scale clamp.
MinibatchRecord train_minibatch(Checkpoint& ckpt, const Matrix& image_batch,
                                const Matrix& text_batch, double lr,
                                std::optional<LwfTeacher> lwf = std::nullopt);

// Binary checkpoint, little-endian, magic "TICC".
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tic
