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

#include "tic/replay.hpp"

#include <algorithm>
#include <numeric>

namespace tic {

namespace {

constexpr std::uint64_t kSampleTag = 0x53414d50ULL;  // "SAMP"
constexpr std::uint64_t kEpochTag = 0x45504f43ULL;   // "EPOC"

}  // namespace

std::string to_string(BufferPolicy p) {
  switch (p) {
    case BufferPolicy::kAll: return "all";
    case BufferPolicy::kExp: return "exp";
    case BufferPolicy::kEqual: return "equal";
  }
  return "?";
}

std::uint64_t ReplayPlan::old_total() const {
  std::uint64_t s = 0;
  for (const auto& [step, n] : per_source_counts) s += n;
  return s;
}

void to_json(nlohmann::json& j, const ReplayPlan& p) {
  nlohmann::json sources = nlohmann::json::object();
  for (const auto& [step, n] : p.per_source_counts) sources[std::to_string(step)] = n;
  j = nlohmann::json{{"current_step", p.current_step},
                     {"per_source_counts", sources},
                     {"current_count", p.current_count}};
}

void from_json(const nlohmann::json& j, ReplayPlan& p) {
  p.current_step = j.at("current_step").get<std::uint32_t>();
  p.current_count = j.at("current_count").get<std::uint64_t>();
  p.per_source_counts.clear();
  for (const auto& item : j.at("per_source_counts").items()) {
    p.per_source_counts[static_cast<std::uint32_t>(std::stoul(item.key()))] =
        item.value().get<std::uint64_t>();
  }
}

ReplayPlan plan_replay(BufferPolicy policy, std::uint32_t t, std::uint64_t per_step_size,
                       std::span<const std::uint64_t> actual_sizes) {
  if (t < 1) throw ConfigError("plan_replay: step must be >= 1");
  if (actual_sizes.size() < t) {
    throw ConfigError("plan_replay: sizes cover " + std::to_string(actual_sizes.size()) +
                      " steps, need " + std::to_string(t));
  }
  const std::uint64_t d = per_step_size;
  ReplayPlan plan;
  plan.current_step = t;
  plan.current_count = actual_sizes[t - 1];
  if (t == 1) return plan;

  const std::uint32_t sources = t - 1;
  std::vector<std::uint64_t> counts(sources, 0);  // counts[j - 1] for source j
  switch (policy) {
    case BufferPolicy::kAll:
      for (std::uint32_t j = 1; j <= sources; ++j) counts[j - 1] = actual_sizes[j - 1];
      break;
    case BufferPolicy::kExp: {
      auto share = [&](std::uint32_t halvings) -> std::uint64_t {
        return halvings >= 64 ? 0 : d >> halvings;
      };
      for (std::uint32_t j = 2; j <= sources; ++j) counts[j - 1] = share(t - j);
      counts[0] = share(t - 2);
      std::uint64_t assigned = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
      // Each floor loses less than one record, so at most one pass is needed.
      for (std::uint32_t j = sources; assigned < d && j >= 1; --j) {
        ++counts[j - 1];
        ++assigned;
      }
      break;
    }
    case BufferPolicy::kEqual: {
      const std::uint64_t base = d / sources;
      const std::uint64_t rem = d % sources;
      for (std::uint32_t j = 1; j <= sources; ++j) counts[j - 1] = base + (j <= rem ? 1 : 0);
      break;
    }
  }
  for (std::uint32_t j = 1; j <= sources; ++j) {
    plan.per_source_counts[j] = std::min(counts[j - 1], actual_sizes[j - 1]);
  }
  return plan;
}

std::vector<RecordRef> sample_step(std::uint32_t source_step, std::uint64_t available,
                                   std::uint64_t count, std::uint64_t seed) {
  if (count > available) {
    throw PlanError("plan asks for " + std::to_string(count) + " records from step " +
                    std::to_string(source_step) + ", only " + std::to_string(available) +
                    " available");
  }
  std::vector<std::uint32_t> idx(available);
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng(seed, derive_stream({kSampleTag, source_step}));
  std::vector<RecordRef> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t j = i + rng.below(available - i);
    std::swap(idx[i], idx[j]);
    out.push_back({source_step - 1, idx[i]});
  }
  return out;
}

std::vector<RecordRef> sample_buffer(const ReplayPlan& plan,
                                     std::span<const TimestepDataset> datasets,
                                     std::uint64_t seed) {
  std::vector<RecordRef> out;
  for (const auto& [step, count] : plan.per_source_counts) {
    if (step < 1 || step > datasets.size()) {
      throw PlanError("plan references step " + std::to_string(step) + " with only " +
                      std::to_string(datasets.size()) + " datasets");
    }
    auto part = sample_step(step, datasets[step - 1].train.size(), count, seed);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<RecordRef> sample_current(const ReplayPlan& plan,
                                      std::span<const TimestepDataset> datasets,
                                      std::uint64_t seed) {
  const std::uint32_t t = plan.current_step;
  if (t < 1 || t > datasets.size()) throw PlanError("plan current step out of range");
  const std::uint64_t available = datasets[t - 1].train.size();
  if (plan.current_count == available) {
    std::vector<RecordRef> out(available);
    for (std::uint32_t i = 0; i < available; ++i) out[i] = {t - 1, i};
    return out;
  }
  return sample_step(t, available, plan.current_count, seed);
}

std::vector<RecordRef> assemble_training_set(std::vector<RecordRef> old_records,
                                             const std::vector<RecordRef>& new_records,
                                             Rng& rng) {
  old_records.insert(old_records.end(), new_records.begin(), new_records.end());
  rng.shuffle(old_records);
  return old_records;
}

BatchStream::BatchStream(std::vector<RecordRef> records, std::size_t batch_size,
                         std::uint64_t seed, std::uint32_t step)
    : records_(std::move(records)), batch_size_(batch_size), seed_(seed), step_(step) {
  if (records_.empty()) throw EmptyInputError("empty training set");
  if (batch_size_ == 0) throw ConfigError("batch_size must be >= 1");
  batch_size_ = std::min(batch_size_, records_.size());
}

std::span<const RecordRef> BatchStream::next() {
  if (pos_ + batch_size_ > records_.size()) {
    ++epoch_;
    Rng rng(seed_, derive_stream({kEpochTag, step_, epoch_}));
    rng.shuffle(records_);
    pos_ = 0;
  }
  std::span<const RecordRef> out(records_.data() + pos_, batch_size_);
  pos_ += batch_size_;
  return out;
}

const PairRecord& resolve(std::span<const TimestepDataset> datasets, const RecordRef& ref) {
  if (ref.step_index >= datasets.size()) {
    throw IndexError("record reference to step index " + std::to_string(ref.step_index));
  }
  return datasets[ref.step_index].train.at(ref.index);
}

std::pair<Matrix, Matrix> gather_batch(std::span<const TimestepDataset> datasets,
                                       std::span<const RecordRef> refs) {
  if (refs.empty()) throw EmptyInputError("empty batch");
  const auto& first = resolve(datasets, refs[0]);
  Matrix img(refs.size(), first.image_vec.size());
  Matrix txt(refs.size(), first.text_vec.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto& rec = resolve(datasets, refs[i]);
    if (rec.image_vec.size() != img.cols() || rec.text_vec.size() != txt.cols()) {
      throw ShapeError("records in one batch have different dimensions");
    }
    std::copy(rec.image_vec.begin(), rec.image_vec.end(), img.row(i).begin());
    std::copy(rec.text_vec.begin(), rec.text_vec.end(), txt.row(i).begin());
  }
  return {std::move(img), std::move(txt)};
}

}  // namespace tic
