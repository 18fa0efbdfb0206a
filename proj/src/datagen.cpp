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

#include "tic/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>

#include "tic/binary_io.hpp"
#include "tic/json_util.hpp"

namespace tic {

namespace {

constexpr std::uint64_t kWorldTag = 0x574f524c44ULL;    // "WORLD"
constexpr std::uint64_t kStepTag = 0x53544550ULL;       // "STEP"
constexpr std::uint64_t kHoldoutTag = 0x484f4c44ULL;    // "HOLD"

constexpr char kMagic[4] = {'T', 'I', 'C', 'D'};
constexpr std::uint32_t kVersion = 1;

std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double sq = 0.0;
  do {
    sq = 0.0;
    for (double& x : v) {
      x = rng.normal();
      sq += x * x;
    }
  } while (sq < 1e-12);
  const double norm = std::sqrt(sq);
  for (double& x : v) x /= norm;
  return v;
}

// Unit vector orthogonal to `base` (itself unit).
std::vector<double> random_orthogonal(Rng& rng, const std::vector<double>& base) {
  std::vector<double> v(base.size());
  for (;;) {
    for (double& x : v) x = rng.normal();
    double dot = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * base[i];
    double sq = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] -= dot * base[i];
      sq += v[i] * v[i];
    }
    if (sq > 1e-12) {
      const double norm = std::sqrt(sq);
      for (double& x : v) x /= norm;
      return v;
    }
  }
}

Matrix random_map(Rng& rng, std::size_t out_dim, std::size_t in_dim) {
  Matrix m(out_dim, in_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (double& x : m.values()) x = scale * rng.normal();
  return m;
}

std::vector<double> apply_map(const Matrix& map, const std::vector<double>& x) {
  std::vector<double> y(map.rows(), 0.0);
  for (std::size_t r = 0; r < map.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < map.cols(); ++c) acc += map(r, c) * x[c];
    y[r] = acc;
  }
  return y;
}

class RecordSampler {
 public:
  RecordSampler(const StreamConfig& cfg, const LatentWorld& world)
      : cfg_(cfg), world_(world) {}

  PairRecord draw(Rng& rng, std::uint32_t class_id, std::uint32_t step) const {
    std::vector<double> latent = world_.prototype(class_id, step);
    if (cfg_.instance_spread > 0.0) {
      const double scale =
          cfg_.instance_spread / std::sqrt(static_cast<double>(cfg_.latent_dim));
      double sq = 0.0;
      for (double& x : latent) {
        x += scale * rng.normal();
        sq += x * x;
      }
      const double norm = std::sqrt(sq);
      if (norm > 1e-12) {
        for (double& x : latent) x /= norm;
      }
    }
    PairRecord rec;
    rec.class_id = class_id;
    rec.timestep = step;
    rec.image_vec = world_.render(Modality::kImage, latent);
    rec.text_vec = world_.render(Modality::kText, latent);
    if (cfg_.noise_sigma > 0.0) {
      for (double& x : rec.image_vec) x += cfg_.noise_sigma * rng.normal();
      for (double& x : rec.text_vec) x += cfg_.noise_sigma * rng.normal();
    }
    return rec;
  }

 private:
  const StreamConfig& cfg_;
  const LatentWorld& world_;
};

}  // namespace

void StreamConfig::validate() const {
  if (num_steps < 1) throw ConfigError("num_steps must be >= 1");
  if (per_step_train_size < 1 || per_step_eval_size < 1) {
    throw ConfigError("per-step sizes must be >= 1");
  }
  if (image_dim < 1 || text_dim < 1 || latent_dim < 1) {
    throw ConfigError("feature dimensions must be >= 1");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
  if (!(render_gain >= 0.0)) throw ConfigError("render_gain must be >= 0");
  if (!(instance_spread >= 0.0)) throw ConfigError("instance_spread must be >= 0");
  if (!(drift_angle >= 0.0 && drift_angle < std::numbers::pi)) {
    throw ConfigError("drift_angle must lie in [0, pi)");
  }
  if (drift_angle > 0.0 && latent_dim < 2) {
    throw ConfigError("drift needs latent_dim >= 2");
  }
  for (const auto& b : class_birth_schedule) {
    if (b.step < 1 || b.step > num_steps) {
      throw ConfigError("class birth step " + std::to_string(b.step) +
                        " outside [1, num_steps]");
    }
  }
  if (classes_alive(1) < 1) throw ConfigError("no class is alive at step 1");
}

std::uint32_t StreamConfig::classes_alive(std::uint32_t step) const {
  std::uint32_t n = static_class_count;
  for (const auto& b : class_birth_schedule) {
    if (b.step <= step) n += b.count;
  }
  return n;
}

std::uint32_t StreamConfig::total_classes() const {
  std::uint32_t n = static_class_count;
  for (const auto& b : class_birth_schedule) n += b.count;
  return n;
}

void to_json(nlohmann::json& j, const StreamConfig& cfg) {
  nlohmann::json births = nlohmann::json::array();
  for (const auto& b : cfg.class_birth_schedule) births.push_back({b.step, b.count});
  j = nlohmann::json{
      {"num_steps", cfg.num_steps},
      {"per_step_train_size", cfg.per_step_train_size},
      {"per_step_eval_size", cfg.per_step_eval_size},
      {"image_dim", cfg.image_dim},
      {"text_dim", cfg.text_dim},
      {"latent_dim", cfg.latent_dim},
      {"class_birth_schedule", births},
      {"drift_angle", cfg.drift_angle},
      {"noise_sigma", cfg.noise_sigma},
      {"render_gain", cfg.render_gain},
      {"instance_spread", cfg.instance_spread},
      {"static_class_count", cfg.static_class_count},
      {"static_holdout_size", cfg.static_holdout_size},
      {"seed", cfg.seed},
  };
}

void from_json(const nlohmann::json& j, StreamConfig& cfg) {
  json_util::ObjectReader r(j, "stream");
  r.get("num_steps", cfg.num_steps);
  r.get("per_step_train_size", cfg.per_step_train_size);
  r.get("per_step_eval_size", cfg.per_step_eval_size);
  r.get("image_dim", cfg.image_dim);
  r.get("text_dim", cfg.text_dim);
  r.get("latent_dim", cfg.latent_dim);
  if (j.contains("class_birth_schedule")) {
    cfg.class_birth_schedule.clear();
    for (const auto& e : j.at("class_birth_schedule")) {
      if (!e.is_array() || e.size() != 2) {
        throw ConfigError("class_birth_schedule entries must be [step, count]");
      }
      cfg.class_birth_schedule.push_back(
          {e[0].get<std::uint32_t>(), e[1].get<std::uint32_t>()});
    }
    r.mark("class_birth_schedule");
  }
  r.get("drift_angle", cfg.drift_angle);
  r.get("noise_sigma", cfg.noise_sigma);
  r.get("render_gain", cfg.render_gain);
  r.get("instance_spread", cfg.instance_spread);
  r.get("static_class_count", cfg.static_class_count);
  r.get("static_holdout_size", cfg.static_holdout_size);
  r.get("seed", cfg.seed);
  r.finish();
}

// ---------------------------------------------------------------------------

LatentWorld::LatentWorld(const StreamConfig& cfg)
    : static_count_(cfg.static_class_count),
      drift_angle_(cfg.drift_angle),
      gain_(cfg.render_gain),
      image_{Matrix(1, 1), std::nullopt},
      text_{Matrix(1, 1), std::nullopt} {
  cfg.validate();
  Rng rng(cfg.seed, derive_stream({kWorldTag}));
  auto make = [&](std::size_t out_dim) {
    if (gain_ == 0.0) return Renderer{random_map(rng, out_dim, cfg.latent_dim), std::nullopt};
    Matrix first = random_map(rng, out_dim, cfg.latent_dim);
    return Renderer{std::move(first), random_map(rng, out_dim, out_dim)};
  };
  image_ = make(cfg.image_dim);
  text_ = make(cfg.text_dim);

  birth_step_.assign(cfg.static_class_count, 1);
  auto births = cfg.class_birth_schedule;
  std::stable_sort(births.begin(), births.end(),
                   [](const ClassBirth& a, const ClassBirth& b) { return a.step < b.step; });
  for (const auto& b : births) birth_step_.insert(birth_step_.end(), b.count, b.step);

  for (std::size_t c = 0; c < birth_step_.size(); ++c) {
    base_.push_back(random_unit(rng, cfg.latent_dim));
    if (cfg.latent_dim >= 2) {
      ortho_.push_back(random_orthogonal(rng, base_.back()));
    } else {
      ortho_.push_back(std::vector<double>(cfg.latent_dim, 0.0));
    }
  }
}

std::vector<double> LatentWorld::prototype(std::uint32_t class_id,
                                           std::uint32_t step) const {
  const auto& base = base_.at(class_id);
  if (is_static(class_id) || drift_angle_ == 0.0) return base;
  const double theta = static_cast<double>(step - 1) * drift_angle_;
  const double c = std::cos(theta), s = std::sin(theta);
  const auto& ortho = ortho_[class_id];
  std::vector<double> out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) out[i] = c * base[i] + s * ortho[i];
  return out;
}

std::vector<double> LatentWorld::render(Modality modality,
                                        const std::vector<double>& latent) const {
  const Renderer& r = modality == Modality::kImage ? image_ : text_;
  std::vector<double> y = apply_map(r.first, latent);
  if (!r.second) return y;
  for (double& x : y) x = std::tanh(gain_ * x);
  return apply_map(*r.second, y);
}

std::vector<TimestepDataset> generate_stream(const StreamConfig& cfg) {
  cfg.validate();
  const LatentWorld world(cfg);
  const RecordSampler sampler(cfg, world);

  std::vector<TimestepDataset> out;
  out.reserve(cfg.num_steps);
  for (std::uint32_t t = 1; t <= cfg.num_steps; ++t) {
    Rng rng(cfg.seed, derive_stream({kStepTag, t}));
    const std::uint32_t alive = cfg.classes_alive(t);
    TimestepDataset ds;
    ds.timestep = t;
    ds.image_dim = cfg.image_dim;
    ds.text_dim = cfg.text_dim;
    // Eval splits are drawn first; training data never reuses those draws.
    for (std::uint32_t i = 0; i < cfg.per_step_eval_size; ++i) {
      const auto c = static_cast<std::uint32_t>(rng.below(alive));
      ds.eval_retrieval.push_back(sampler.draw(rng, c, t));
    }
    for (std::uint32_t i = 0; i < cfg.per_step_eval_size; ++i) {
      ds.eval_classification.push_back(sampler.draw(rng, i % alive, t));
    }
    for (std::uint32_t i = 0; i < cfg.per_step_train_size; ++i) {
      const auto c = static_cast<std::uint32_t>(rng.below(alive));
      ds.train.push_back(sampler.draw(rng, c, t));
    }
    for (std::uint32_t c = 0; c < alive; ++c) {
      ds.class_prototypes[c] = world.render(Modality::kText, world.prototype(c, t));
    }
    out.push_back(std::move(ds));
  }
  return out;
}

TimestepDataset generate_static_holdout(const StreamConfig& cfg) {
  cfg.validate();
  const LatentWorld world(cfg);
  const RecordSampler sampler(cfg, world);
  TimestepDataset ds;
  ds.timestep = 0;
  ds.image_dim = cfg.image_dim;
  ds.text_dim = cfg.text_dim;
  if (cfg.static_class_count == 0) return ds;
  Rng rng(cfg.seed, derive_stream({kHoldoutTag}));
  for (std::uint32_t i = 0; i < cfg.static_holdout_size; ++i) {
    PairRecord rec = sampler.draw(rng, i % cfg.static_class_count, 1);
    rec.timestep = ds.timestep;
    ds.eval_classification.push_back(std::move(rec));
  }
  for (std::uint32_t c = 0; c < cfg.static_class_count; ++c) {
    ds.class_prototypes[c] = world.render(Modality::kText, world.prototype(c, 1));
  }
  return ds;
}

std::vector<TimestepDataset> aggregate_early_steps(
    const std::vector<TimestepDataset>& datasets, std::uint32_t merge_first_k) {
  if (merge_first_k < 1 || merge_first_k > datasets.size()) {
    throw ConfigError("merge_first_k=" + std::to_string(merge_first_k) +
                      " outside [1, " + std::to_string(datasets.size()) + "]");
  }
  if (merge_first_k == 1) return datasets;

  TimestepDataset merged;
  const TimestepDataset& last = datasets[merge_first_k - 1];
  merged.timestep = last.timestep;
  merged.image_dim = last.image_dim;
  merged.text_dim = last.text_dim;
  merged.class_prototypes = last.class_prototypes;
  auto append = [&](std::vector<PairRecord>& dst, const std::vector<PairRecord>& src) {
    for (PairRecord rec : src) {
      rec.timestep = merged.timestep;
      dst.push_back(std::move(rec));
    }
  };
  for (std::uint32_t i = 0; i < merge_first_k; ++i) {
    append(merged.train, datasets[i].train);
    append(merged.eval_retrieval, datasets[i].eval_retrieval);
    append(merged.eval_classification, datasets[i].eval_classification);
  }

  std::vector<TimestepDataset> out;
  out.push_back(std::move(merged));
  out.insert(out.end(), datasets.begin() + merge_first_k, datasets.end());
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void write_section(io::ByteWriter& w, const std::vector<PairRecord>& records,
                   const TimestepDataset& ds) {
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const auto& rec : records) {
    if (rec.image_vec.size() != ds.image_dim || rec.text_vec.size() != ds.text_dim) {
      throw ShapeError("record dimensions do not match dataset header");
    }
    w.u32(rec.class_id);
    w.f64s(rec.image_vec);
    w.f64s(rec.text_vec);
  }
}

std::vector<PairRecord> read_section(io::ByteReader& r, const TimestepDataset& ds) {
  const std::uint32_t count = r.u32("record count");
  const std::uint64_t record_bytes = 4 + 8ull * (ds.image_dim + ds.text_dim);
  if (record_bytes * count > r.remaining()) {
    r.fail("record count " + std::to_string(count) + " exceeds file size");
  }
  std::vector<PairRecord> out(count);
  for (auto& rec : out) {
    rec.class_id = r.u32("class_id");
    rec.timestep = ds.timestep;
    rec.image_vec.resize(ds.image_dim);
    rec.text_vec.resize(ds.text_dim);
    r.f64s(rec.image_vec, "image vector");
    r.f64s(rec.text_vec, "text vector");
  }
  return out;
}

}  // namespace

void write_timestep_file(const TimestepDataset& ds, const std::filesystem::path& path) {
  io::ByteWriter w;
  w.bytes(std::string_view(kMagic, 4));
  w.u32(kVersion);
  w.u32(ds.timestep);
  w.u32(ds.image_dim);
  w.u32(ds.text_dim);
  write_section(w, ds.train, ds);
  write_section(w, ds.eval_retrieval, ds);
  write_section(w, ds.eval_classification, ds);
  w.u32(static_cast<std::uint32_t>(ds.class_prototypes.size()));
  for (const auto& [id, proto] : ds.class_prototypes) {
    if (proto.size() != ds.text_dim) throw ShapeError("prototype has wrong text_dim");
    w.u32(id);
    w.f64s(proto);
  }
  w.save(path);
}

TimestepDataset read_timestep_file(const std::filesystem::path& path) {
  auto r = io::ByteReader::load(path);
  if (r.remaining() < 4 || r.bytes(4, "magic") != std::string_view(kMagic, 4)) {
    throw FormatError("bad magic in " + path.string(), 0);
  }
  const std::uint64_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kVersion) throw UnsupportedVersionError(version, version_at);

  TimestepDataset ds;
  ds.timestep = r.u32("timestep");
  const std::uint64_t dims_at = r.offset();
  ds.image_dim = r.u32("image_dim");
  ds.text_dim = r.u32("text_dim");
  if (ds.image_dim == 0 || ds.text_dim == 0) {
    throw FormatError("zero feature dimension", dims_at);
  }
  ds.train = read_section(r, ds);
  ds.eval_retrieval = read_section(r, ds);
  ds.eval_classification = read_section(r, ds);
  const std::uint32_t n_protos = r.u32("prototype count");
  for (std::uint32_t i = 0; i < n_protos; ++i) {
    const std::uint64_t at = r.offset();
    const std::uint32_t id = r.u32("prototype class_id");
    std::vector<double> proto(ds.text_dim);
    r.f64s(proto, "prototype");
    if (!ds.class_prototypes.emplace(id, std::move(proto)).second) {
      throw FormatError("duplicate prototype for class " + std::to_string(id), at);
    }
  }
  if (r.remaining() != 0) r.fail("trailing bytes after prototype section");
  return ds;
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const StreamManifest& m) {
  j = nlohmann::json{{"format", "tic-stream"},
                     {"version", 1},
                     {"config", m.config},
                     {"merge_first_k", m.merge_first_k},
                     {"num_steps", m.num_steps},
                     {"steps", m.step_files},
                     {"static_holdout", m.static_holdout_file}};
}

void from_json(const nlohmann::json& j, StreamManifest& m) {
  if (j.value("format", "") != "tic-stream") {
    throw ConfigError("not a stream manifest");
  }
  m.config = j.at("config").get<StreamConfig>();
  m.merge_first_k = j.at("merge_first_k").get<std::uint32_t>();
  m.num_steps = j.at("num_steps").get<std::uint32_t>();
  m.step_files = j.at("steps").get<std::vector<std::string>>();
  m.static_holdout_file = j.at("static_holdout").get<std::string>();
  if (m.step_files.size() != m.num_steps) {
    throw ConfigError("stream manifest lists " + std::to_string(m.step_files.size()) +
                      " step files for num_steps=" + std::to_string(m.num_steps));
  }
}

StreamManifest write_stream(const StreamConfig& cfg, std::uint32_t merge_first_k,
                            const std::filesystem::path& dir) {
  auto steps = aggregate_early_steps(generate_stream(cfg), merge_first_k);
  std::filesystem::create_directories(dir);
  StreamManifest m;
  m.config = cfg;
  m.merge_first_k = merge_first_k;
  m.num_steps = static_cast<std::uint32_t>(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "step_%02zu.ticd", i + 1);
    write_timestep_file(steps[i], dir / name);
    m.step_files.emplace_back(name);
  }
  m.static_holdout_file = "static_holdout.ticd";
  write_timestep_file(generate_static_holdout(cfg), dir / m.static_holdout_file);
  json_util::write_json(dir / kStreamManifestName, nlohmann::json(m));
  return m;
}

LoadedStream load_stream(const std::filesystem::path& dir) {
  // A missing stream is a data problem, not a configuration one.
  if (!std::filesystem::is_regular_file(dir / kStreamManifestName)) {
    throw Error("no stream manifest in " + dir.string());
  }
  LoadedStream out;
  out.manifest = json_util::read_json(dir / kStreamManifestName).get<StreamManifest>();
  for (const auto& f : out.manifest.step_files) {
    out.steps.push_back(read_timestep_file(dir / f));
  }
  out.static_holdout = read_timestep_file(dir / out.manifest.static_holdout_file);
  return out;
}

}  // namespace tic
