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

// Replay buffers for the Cumulative family and training-set assembly.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tic/datagen.hpp"
#include "tic/numerics.hpp"

namespace tic {

enum class BufferPolicy { kAll, kExp, kEqual };

std::string to_string(BufferPolicy p);

struct ReplayPlan {
  std::uint32_t current_step = 1;
  // Source step (1-based, < current_step) -> number of replayed records.
  std::map<std::uint32_t, std::uint64_t> per_source_counts;
  std::uint64_t current_count = 0;

  std::uint64_t old_total() const;
  std::uint64_t total() const { return old_total() + current_count; }
  bool operator==(const ReplayPlan&) const = default;
};

void to_json(nlohmann::json& j, const ReplayPlan& p);
void from_json(const nlohmann::json& j, ReplayPlan& p);

// actual_sizes[i] is the train size of step i + 1 and must cover steps 1..t.
//   all:   every source step in full.
//   exp:   step j >= 2 keeps D / 2^(t-j), step 1 shares the smallest share
//          D / 2^(t-2); floors are topped up newest-first.
//   equal: D / (t-1) each, largest remainder to the earliest steps.
// Counts are capped by availability; the current step contributes its whole
// train split.
ReplayPlan plan_replay(BufferPolicy policy, std::uint32_t t, std::uint64_t per_step_size,
                       std::span<const std::uint64_t> actual_sizes);

// A record reference: (0-based step index, index within its train split).
struct RecordRef {
  std::uint32_t step_index = 0;
  std::uint32_t index = 0;
  bool operator==(const RecordRef&) const = default;
  auto operator<=>(const RecordRef&) const = default;
};

// First `count` entries of a seeded permutation of step `source_step`. The
// permutation depends only on (seed, source_step), so a shrinking count keeps
// a subset of what was kept before, as a persisted buffer would.
std::vector<RecordRef> sample_step(std::uint32_t source_step, std::uint64_t available,
                                   std::uint64_t count, std::uint64_t seed);

// Uniform sampling without replacement per source step, deterministic in
// `seed`. Throws PlanError when a count exceeds availability.
std::vector<RecordRef> sample_buffer(const ReplayPlan& plan,
                                     std::span<const TimestepDataset> datasets,
                                     std::uint64_t seed);

// Records drawn from the current step per the plan.
std::vector<RecordRef> sample_current(const ReplayPlan& plan,
                                      std::span<const TimestepDataset> datasets,
                                      std::uint64_t seed);

// Concatenation followed by a seeded uniform shuffle.
std::vector<RecordRef> assemble_training_set(std::vector<RecordRef> old_records,
                                             const std::vector<RecordRef>& new_records,
                                             Rng& rng);

// Consecutive minibatches over a training list; the list is reshuffled with
// a derived stream at each epoch boundary and a short tail is dropped.
class BatchStream {
 public:
  BatchStream(std::vector<RecordRef> records, std::size_t batch_size, std::uint64_t seed,
              std::uint32_t step);

  std::span<const RecordRef> next();
  std::size_t batch_size() const { return batch_size_; }
  std::uint64_t epoch() const { return epoch_; }

 private:
  std::vector<RecordRef> records_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::uint32_t step_;
  std::uint64_t epoch_ = 0;
  std::size_t pos_ = 0;
};

const PairRecord& resolve(std::span<const TimestepDataset> datasets, const RecordRef& ref);

// Packs records into aligned image/text matrices.
std::pair<Matrix, Matrix> gather_batch(std::span<const TimestepDataset> datasets,
                                       std::span<const RecordRef> refs);

}  // namespace tic
