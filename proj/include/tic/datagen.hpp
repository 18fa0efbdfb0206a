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

// Synthetic timestamped image-text streams.
//
// Every class owns a unit latent prototype. Drifting classes rotate by a
// fixed angle per elapsed step inside a class-specific 2-plane that contains
// the prototype, so the angle to the step-1 prototype grows linearly. Static
// classes never move. A record draws a class, perturbs the prototype with a
// per-instance latent offset shared by both modalities, and renders it per
// modality before adding independent feature noise. A renderer is
// y = W2 tanh(g W1 z) with seeded Gaussian W1, W2 and gain g; g = 0 makes it
// the linear map y = W z. A nonlinear renderer ties the image-text relation
// to the region of latent space the data occupies, so drift moves the task.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tic/numerics.hpp"

namespace tic {

struct ClassBirth {
  std::uint32_t step = 1;
  std::uint32_t count = 0;
  bool operator==(const ClassBirth&) const = default;
};

struct StreamConfig {
  std::uint32_t num_steps = 4;
  std::uint32_t per_step_train_size = 2048;
  std::uint32_t per_step_eval_size = 256;
  std::uint32_t image_dim = 32;
  std::uint32_t text_dim = 24;
  std::uint32_t latent_dim = 8;
  std::vector<ClassBirth> class_birth_schedule = {{1, 8}};
  double drift_angle = 0.3;
  double noise_sigma = 0.05;
  // Renderer nonlinearity; 0 gives linear modality maps.
  double render_gain = 2.0;
  // Scale of the per-instance latent offset. Zero collapses every record of a
  // class onto its prototype.
  double instance_spread = 0.3;
  std::uint32_t static_class_count = 4;
  // Records in the fixed static-class holdout.
  std::uint32_t static_holdout_size = 256;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void validate() const;
  // Classes alive at `step` (static classes plus births at or before it).
  std::uint32_t classes_alive(std::uint32_t step) const;
  std::uint32_t total_classes() const;

  bool operator==(const StreamConfig&) const = default;
};

void to_json(nlohmann::json& j, const StreamConfig& cfg);
void from_json(const nlohmann::json& j, StreamConfig& cfg);

struct PairRecord {
  std::vector<double> image_vec;
  std::vector<double> text_vec;
  std::uint32_t class_id = 0;
  std::uint32_t timestep = 1;

  bool operator==(const PairRecord&) const = default;
};

struct TimestepDataset {
  std::uint32_t timestep = 1;
  std::uint32_t image_dim = 0;
  std::uint32_t text_dim = 0;
  std::vector<PairRecord> train;
  std::vector<PairRecord> eval_retrieval;
  std::vector<PairRecord> eval_classification;
  // Canonical (noise-free) text vector per alive class.
  std::map<std::uint32_t, std::vector<double>> class_prototypes;

  bool operator==(const TimestepDataset&) const = default;
};

enum class Modality { kImage, kText };

// Latent prototypes. Static classes take ids [0, static_class_count); born
// classes follow in schedule order.
class LatentWorld {
 public:
  explicit LatentWorld(const StreamConfig& cfg);

  bool is_static(std::uint32_t class_id) const {
    return class_id < static_count_;
  }
  std::uint32_t birth_step(std::uint32_t class_id) const {
    return birth_step_.at(class_id);
  }
  // Unit prototype of `class_id` at `step`.
  std::vector<double> prototype(std::uint32_t class_id, std::uint32_t step) const;

  // Noise-free features of a latent point.
  std::vector<double> render(Modality modality, const std::vector<double>& latent) const;

 private:
  struct Renderer {
    Matrix first;                 // hidden x latent, or out x latent when linear
    std::optional<Matrix> second;  // out x hidden; absent when linear
  };

  std::uint32_t static_count_;
  double drift_angle_;
  std::vector<std::uint32_t> birth_step_;
  std::vector<std::vector<double>> base_;
  std::vector<std::vector<double>> ortho_;
  double gain_;
  Renderer image_;
  Renderer text_;
};

std::vector<TimestepDataset> generate_stream(const StreamConfig& cfg);

// Fixed holdout of static-class records (timestep 0, classification split
// only) used as the static-task analog.
TimestepDataset generate_static_holdout(const StreamConfig& cfg);

// Merges the first k steps into one dataset stamped with step k.
std::vector<TimestepDataset> aggregate_early_steps(
    const std::vector<TimestepDataset>& datasets, std::uint32_t merge_first_k);

// Binary timestep file, little-endian, magic "TICD".
void write_timestep_file(const TimestepDataset& ds,
                         const std::filesystem::path& path);
TimestepDataset read_timestep_file(const std::filesystem::path& path);

// A generated stream on disk: per-step files plus the static holdout.
struct StreamManifest {
  StreamConfig config;
  std::uint32_t merge_first_k = 1;
  std::uint32_t num_steps = 0;  // after aggregation
  std::vector<std::string> step_files;
  std::string static_holdout_file;
};

void to_json(nlohmann::json& j, const StreamManifest& m);
void from_json(const nlohmann::json& j, StreamManifest& m);

inline constexpr const char* kStreamManifestName = "stream_manifest.json";

// Generates, aggregates and writes the stream into `dir`.
StreamManifest write_stream(const StreamConfig& cfg, std::uint32_t merge_first_k,
                            const std::filesystem::path& dir);

struct LoadedStream {
  StreamManifest manifest;
  std::vector<TimestepDataset> steps;
  TimestepDataset static_holdout;
};

LoadedStream load_stream(const std::filesystem::path& dir);

}  // namespace tic
