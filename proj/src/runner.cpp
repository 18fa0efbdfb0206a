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

#include "tic/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <thread>

#include "tic/json_util.hpp"

namespace tic {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kIidSplitTag = 0x49494453ULL;  // "IIDS"

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <typename T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

// Runs jobs [0, n) on up to `threads` workers and rethrows the first failure
// in job order once all workers have finished.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned count = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  std::vector<std::jthread> pool;
  for (unsigned k = 1; k < count; ++k) pool.emplace_back(worker);
  worker();
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration.

ModelDims ModelConfig::dims(std::size_t image_dim, std::size_t text_dim) const {
  ModelDims d;
  d.image_widths.push_back(image_dim);
  d.text_widths.push_back(text_dim);
  for (std::uint32_t l = 0; l < hidden_layers; ++l) {
    d.image_widths.push_back(hidden_dim);
    d.text_widths.push_back(hidden_dim);
  }
  d.image_widths.push_back(embed_dim);
  d.text_widths.push_back(embed_dim);
  return d;
}

ExperimentConfig::ExperimentConfig() {
  for (MethodId id : all_methods()) methods.push_back(to_string(id));
}

void ExperimentConfig::validate() const {
  stream.validate();
  if (merge_first_k < 1 || merge_first_k > stream.num_steps) {
    throw ConfigError("merge_first_k must lie in [1, num_steps]");
  }
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (model.hidden_dim < 1 || model.embed_dim < 1) {
    throw ConfigError("model dimensions must be >= 1");
  }
  for (const auto& m : methods) method_from_string(m);
  for (const auto& [m, mult] : compute_multiplier) {
    method_from_string(m);
    if (mult < 1) throw ConfigError("compute_multiplier for " + m + " must be >= 1");
  }
  for (std::uint32_t k : iid_split.splits) {
    if (k < 1) throw ConfigError("iid_split.splits entries must be >= 1");
  }
  if (iid_split.train_size < 1 || iid_split.holdout_size < 1) {
    throw ConfigError("iid_split sizes must be >= 1");
  }
  training_settings(MethodId::kSequential).validate();
}

TrainingSettings ExperimentConfig::training_settings(MethodId method) const {
  TrainingSettings s;
  s.dims = model.dims(stream.image_dim, stream.text_dim);
  s.schedule = schedule;
  s.total_iterations = total_iterations;
  s.num_steps = effective_steps();
  s.batch_size = batch_size;
  s.per_step_size = stream.per_step_train_size;
  s.lwf_lambda = lwf_lambda;
  if (auto it = compute_multiplier.find(to_string(method)); it != compute_multiplier.end()) {
    s.compute_multiplier = it->second;
  }
  return s;
}

void to_json(nlohmann::json& j, const ExperimentConfig& cfg) {
  nlohmann::json sched = cfg.schedule;
  sched.erase("total_iters");
  j = nlohmann::json{
      {"stream", cfg.stream},
      {"merge_first_k", cfg.merge_first_k},
      {"schedule", sched},
      {"model",
       {{"hidden_dim", cfg.model.hidden_dim},
        {"hidden_layers", cfg.model.hidden_layers},
        {"embed_dim", cfg.model.embed_dim}}},
      {"total_iterations", cfg.total_iterations},
      {"batch_size", cfg.batch_size},
      {"methods", cfg.methods},
      {"seeds", cfg.seeds},
      {"lwf_lambda", cfg.lwf_lambda},
      {"compute_multiplier", cfg.compute_multiplier},
      {"iid_split",
       {{"train_size", cfg.iid_split.train_size},
        {"holdout_size", cfg.iid_split.holdout_size},
        {"total_iterations", cfg.iid_split.total_iterations},
        {"splits", cfg.iid_split.splits}}}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& cfg) {
  json_util::ObjectReader r(j, "config");
  r.get("stream", cfg.stream);
  r.get("merge_first_k", cfg.merge_first_k);
  r.mark("schedule");
  if (j.contains("schedule")) {
    if (j.at("schedule").is_object() && j.at("schedule").contains("total_iters")) {
      throw ConfigError("config.schedule.total_iters is derived from total_iterations");
    }
    cfg.schedule = j.at("schedule").get<ScheduleConfig>();
  }
  r.mark("model");
  if (j.contains("model")) {
    json_util::ObjectReader m(j.at("model"), "config.model");
    m.get("hidden_dim", cfg.model.hidden_dim);
    m.get("hidden_layers", cfg.model.hidden_layers);
    m.get("embed_dim", cfg.model.embed_dim);
    m.finish();
  }
  r.get("total_iterations", cfg.total_iterations);
  r.get("batch_size", cfg.batch_size);
  r.get("methods", cfg.methods);
  r.get("seeds", cfg.seeds);
  r.get("lwf_lambda", cfg.lwf_lambda);
  r.get("compute_multiplier", cfg.compute_multiplier);
  r.mark("iid_split");
  if (j.contains("iid_split")) {
    json_util::ObjectReader s(j.at("iid_split"), "config.iid_split");
    s.get("train_size", cfg.iid_split.train_size);
    s.get("holdout_size", cfg.iid_split.holdout_size);
    s.get("total_iterations", cfg.iid_split.total_iterations);
    s.get("splits", cfg.iid_split.splits);
    s.finish();
  }
  r.finish();
  cfg.schedule.total_iters = per_step_iterations(cfg.total_iterations, cfg.effective_steps());
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  ExperimentConfig cfg = json_util::read_json(path).get<ExperimentConfig>();
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Manifests.

void to_json(nlohmann::json& j, const RunManifest& m) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : m.steps) {
    steps.push_back({{"step", s.step},
                     {"checkpoint", s.checkpoint},
                     {"continuation", optional_json(s.continuation)},
                     {"plan", s.plan},
                     {"training_set_size", s.training_set_size},
                     {"iterations", s.iterations},
                     {"final_clip_loss", s.final_clip_loss},
                     {"alpha", optional_json(s.alpha)},
                     {"wall_clock_seconds", s.wall_clock_seconds}});
  }
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [task, files] : m.metric_files) {
    metrics[task] = {{"json", files.json}, {"csv", files.csv}, {"summary", m.summaries.at(task)}};
  }
  j = nlohmann::json{{"format", "tic-run"},
                     {"format_version", m.format_version},
                     {"method", m.method},
                     {"seed", m.seed},
                     {"status", m.status},
                     {"error", m.error},
                     {"config", m.config},
                     {"steps", steps},
                     {"ledger", m.ledger},
                     {"alphas", m.alphas},
                     {"metrics", metrics},
                     {"static_accuracy", m.static_accuracy},
                     {"static_final", optional_json(m.static_final)},
                     {"eval_macs", m.eval_macs},
                     {"wall_clock_seconds", m.wall_clock_seconds}};
}

void from_json(const nlohmann::json& j, RunManifest& m) {
  if (j.value("format", "") != "tic-run") throw ConfigError("not a run manifest");
  m.format_version = j.at("format_version").get<std::uint32_t>();
  if (m.format_version != kRunFormatVersion) {
    throw ConfigError("unsupported run manifest version " + std::to_string(m.format_version));
  }
  m.method = j.at("method").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.status = j.at("status").get<std::string>();
  m.error = j.at("error").get<std::string>();
  m.config = j.at("config");
  m.steps.clear();
  for (const auto& s : j.at("steps")) {
    StepRecord r;
    r.step = s.at("step").get<std::uint32_t>();
    r.checkpoint = s.at("checkpoint").get<std::string>();
    r.continuation = optional_from<std::string>(s, "continuation");
    r.plan = s.at("plan").get<ReplayPlan>();
    r.training_set_size = s.at("training_set_size").get<std::uint64_t>();
    r.iterations = s.at("iterations").get<std::uint64_t>();
    r.final_clip_loss = s.at("final_clip_loss").get<double>();
    r.alpha = optional_from<double>(s, "alpha");
    r.wall_clock_seconds = s.at("wall_clock_seconds").get<double>();
    m.steps.push_back(std::move(r));
  }
  m.ledger = j.at("ledger").get<BudgetLedger>();
  m.alphas = j.at("alphas").get<std::vector<double>>();
  m.metric_files.clear();
  m.summaries.clear();
  for (const auto& item : j.at("metrics").items()) {
    m.metric_files[item.key()] = {item.value().at("json").get<std::string>(),
                                  item.value().at("csv").get<std::string>()};
    m.summaries[item.key()] = item.value().at("summary").get<EvalSummary>();
  }
  m.static_accuracy = j.at("static_accuracy").get<std::vector<double>>();
  m.static_final = optional_from<double>(j, "static_final");
  m.eval_macs = j.at("eval_macs").get<std::uint64_t>();
  m.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
}

namespace {

RunManifest parse_manifest(const fs::path& run_dir) {
  const nlohmann::json j = json_util::read_json(run_dir / kRunManifestName);
  try {
    return j.get<RunManifest>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError((run_dir / kRunManifestName).string() + ": " + e.what());
  }
}

void require_file(const fs::path& run_dir, const std::string& rel) {
  if (!fs::is_regular_file(run_dir / rel)) {
    throw ConfigError("manifest references missing file " + (run_dir / rel).string());
  }
}

}  // namespace

RunManifest load_manifest(const fs::path& run_dir) {
  RunManifest m = parse_manifest(run_dir);
  for (const auto& s : m.steps) {
    require_file(run_dir, s.checkpoint);
    load_checkpoint(run_dir / s.checkpoint);
    if (s.continuation) {
      require_file(run_dir, *s.continuation);
      load_checkpoint(run_dir / *s.continuation);
    }
  }
  for (const auto& [task, files] : m.metric_files) {
    require_file(run_dir, files.json);
    require_file(run_dir, files.csv);
    matrix_from_json(json_util::read_json(run_dir / files.json));
  }
  return m;
}

std::string run_dir_name(const std::string& method, std::uint64_t seed) {
  return method + "_seed" + std::to_string(seed);
}

// ---------------------------------------------------------------------------
// Runs.

namespace {

std::string step_file(std::uint32_t t, const char* suffix) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "checkpoints/step_%02u%s", t, suffix);
  return buf;
}

void check_stream(const ExperimentConfig& cfg, const LoadedStream& stream) {
  if (!(stream.manifest.config == cfg.stream) ||
      stream.manifest.merge_first_k != cfg.merge_first_k) {
    throw ConfigError("stream on disk was generated from a different stream config");
  }
  if (stream.steps.size() != cfg.effective_steps()) {
    throw ConfigError("stream has " + std::to_string(stream.steps.size()) +
                      " steps, config expects " + std::to_string(cfg.effective_steps()));
  }
}

// Fills metric files, summaries and static-task accuracy for `models`.
void evaluate_models(const std::vector<TwoTowerParams>& models, const LoadedStream& stream,
                     const fs::path& run_dir, RunManifest& m) {
  fs::create_directories(run_dir / "metrics");
  m.metric_files.clear();
  m.summaries.clear();
  m.eval_macs = 0;
  for (TaskKind task : all_tasks()) {
    const PerformanceMatrix pm =
        build_performance_matrix(models, stream.steps, task, &m.eval_macs);
    const std::string name = to_string(task);
    MetricFiles files{"metrics/" + name + ".json", "metrics/" + name + ".csv"};
    json_util::write_json(run_dir / files.json, matrix_to_json(pm));
    json_util::write_text(run_dir / files.csv, matrix_to_csv(pm));
    m.metric_files[name] = files;
    m.summaries[name] = summarize(pm);
  }
  m.static_accuracy.clear();
  const auto& holdout = stream.static_holdout;
  for (const auto& model : models) {
    m.static_accuracy.push_back(
        zero_shot_accuracy(model, holdout.eval_classification, holdout.class_prototypes));
    m.eval_macs += classification_eval_macs(model, holdout.eval_classification.size(),
                                            holdout.class_prototypes.size());
  }
  m.static_final = m.static_accuracy.back();
}

}  // namespace

RunManifest run_method(const ExperimentConfig& cfg, const LoadedStream& stream,
                       const std::string& method, std::uint64_t seed, const fs::path& run_dir,
                       const RunOptions& options) {
  cfg.validate();
  check_stream(cfg, stream);
  const MethodSpec spec = resolve_method(method);
  const TrainingSettings settings = cfg.training_settings(spec.id);
  const std::uint32_t num_steps = cfg.effective_steps();

  RunManifest m;
  m.method = method;
  m.seed = seed;
  m.config = cfg;
  m.ledger = BudgetLedger(per_step_iterations(settings.total_iterations, num_steps),
                          macs_per_iteration(init_params(settings.dims, seed), cfg.batch_size));

  std::optional<StepState> state;
  std::vector<TwoTowerParams> models;
  const fs::path manifest_path = run_dir / kRunManifestName;

  if (options.resume && fs::exists(manifest_path)) {
    RunManifest old = parse_manifest(run_dir);
    if (old.config != m.config || old.method != method || old.seed != seed) {
      throw ConfigError(run_dir.string() + " holds a run with a different configuration");
    }
    if (old.status == "complete") return load_manifest(run_dir);
    m.steps = old.steps;
    m.alphas = old.alphas;
    m.ledger.entries() = old.ledger.entries();
    m.ledger.entries().resize(m.steps.size());
    for (const auto& s : m.steps) {
      StepState st;
      st.checkpoint = load_checkpoint(run_dir / s.checkpoint);
      if (s.continuation) st.continuation = load_checkpoint(run_dir / *s.continuation);
      if (spec.init_source == InitSource::kLastPatched) {
        st.patch = PatchState{st.checkpoint.params, {}};
      }
      models.push_back(st.checkpoint.params);
      state = std::move(st);
    }
    if (state && state->patch) state->patch->alpha_history = m.alphas;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    fs::create_directories(run_dir / "checkpoints");
    for (auto t = static_cast<std::uint32_t>(m.steps.size() + 1); t <= num_steps; ++t) {
      const auto step_start = std::chrono::steady_clock::now();
      StepResult r = run_step(spec, t, stream.steps, state ? &*state : nullptr, settings,
                              m.ledger, seed);
      StepRecord rec;
      rec.step = t;
      rec.checkpoint = step_file(t, ".ckpt");
      save_checkpoint(run_dir / rec.checkpoint, r.state.checkpoint);
      if (r.state.continuation) {
        rec.continuation = step_file(t, ".cont.ckpt");
        save_checkpoint(run_dir / *rec.continuation, *r.state.continuation);
      }
      rec.plan = r.plan;
      rec.training_set_size = r.training_set_size;
      rec.iterations = r.iterations;
      rec.final_clip_loss = r.final_clip_loss;
      rec.alpha = r.alpha;
      if (r.alpha) m.alphas.push_back(*r.alpha);
      rec.wall_clock_seconds = seconds_since(step_start);
      m.steps.push_back(std::move(rec));
      models.push_back(r.state.checkpoint.params);
      state = std::move(r.state);
      m.wall_clock_seconds += m.steps.back().wall_clock_seconds;
      json_util::write_json(manifest_path, m);
      if (options.stop_after_step && t >= *options.stop_after_step && t < num_steps) return m;
    }
    const auto eval_start = std::chrono::steady_clock::now();
    evaluate_models(models, stream, run_dir, m);
    m.wall_clock_seconds += seconds_since(eval_start);
    m.status = "complete";
    json_util::write_json(manifest_path, m);
  } catch (const std::exception& e) {
    m.status = "failed";
    m.error = e.what();
    m.wall_clock_seconds += seconds_since(start);
    try {
      json_util::write_json(manifest_path, m);
    } catch (const std::exception&) {
      // The original error is more useful than a failed status write.
    }
    throw;
  }
  return m;
}

RunManifest evaluate_run(const fs::path& run_dir, const LoadedStream& stream) {
  RunManifest m = load_manifest(run_dir);
  if (m.status != "complete") throw ProtocolError(run_dir.string() + " is not a complete run");
  const ExperimentConfig cfg = m.config.get<ExperimentConfig>();
  check_stream(cfg, stream);
  std::vector<TwoTowerParams> models;
  for (const auto& s : m.steps) models.push_back(load_checkpoint(run_dir / s.checkpoint).params);
  evaluate_models(models, stream, run_dir, m);
  return m;
}

unsigned thread_cap_from_env() {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TIC_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw ConfigError("TIC_THREADS must be a positive integer, got '" + std::string(env) + "'");
    }
    cap = static_cast<unsigned>(v);
  }
  return cap;
}

std::vector<RunManifest> run_experiment(const ExperimentConfig& cfg, const LoadedStream& stream,
                                        const fs::path& out_dir, unsigned max_threads) {
  cfg.validate();
  check_stream(cfg, stream);
  std::vector<std::pair<std::string, std::uint64_t>> jobs;
  for (const auto& method : cfg.methods) {
    for (std::uint64_t seed : cfg.seeds) jobs.emplace_back(method, seed);
  }
  // Longest runs first so the pool drains evenly.
  std::stable_partition(jobs.begin(), jobs.end(),
                        [](const auto& j) { return j.first == to_string(MethodId::kOracle); });
  std::vector<RunManifest> out(jobs.size());
  const unsigned threads = max_threads == 0 ? thread_cap_from_env() : max_threads;
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    const auto& [method, seed] = jobs[i];
    out[i] = run_method(cfg, stream, method, seed, out_dir / run_dir_name(method, seed));
  });
  return out;
}

// ---------------------------------------------------------------------------
// IID splits.

namespace {

TimestepDataset iid_pool(const ExperimentConfig& cfg) {
  StreamConfig s = cfg.stream;
  s.num_steps = 1;
  s.per_step_train_size = cfg.iid_split.train_size;
  s.per_step_eval_size = cfg.iid_split.holdout_size;
  std::uint32_t born = 0;
  for (const auto& b : s.class_birth_schedule) born += b.count;
  s.class_birth_schedule = {{1, born}};
  s.validate();
  return generate_stream(s).front();
}

std::vector<TimestepDataset> iid_chunks(const TimestepDataset& pool, std::uint32_t k,
                                        std::uint64_t data_seed) {
  std::vector<std::size_t> order(pool.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(data_seed, derive_stream({kIidSplitTag, k}));
  rng.shuffle(order);
  std::vector<TimestepDataset> chunks(k);
  const std::size_t n = order.size();
  for (std::uint32_t c = 0; c < k; ++c) {
    auto& ds = chunks[c];
    ds.timestep = c + 1;
    ds.image_dim = pool.image_dim;
    ds.text_dim = pool.text_dim;
    for (std::size_t p = c * n / k; p < (c + 1) * n / k; ++p) {
      ds.train.push_back(pool.train[order[p]]);
      ds.train.back().timestep = c + 1;
    }
    if (ds.train.empty()) throw ConfigError("iid split leaves an empty chunk");
  }
  return chunks;
}

}  // namespace

std::vector<IidSplitRow> iid_split_experiment(const ExperimentConfig& cfg,
                                              const std::vector<std::uint32_t>& splits,
                                              unsigned max_threads) {
  cfg.validate();
  if (splits.empty()) throw ConfigError("no splits requested");
  const TimestepDataset pool = iid_pool(cfg);
  std::vector<IidSplitRow> rows(splits.size());
  std::vector<std::vector<TimestepDataset>> chunks;
  for (std::size_t r = 0; r < splits.size(); ++r) {
    if (splits[r] < 1) throw ConfigError("split counts must be >= 1");
    rows[r].splits = splits[r];
    rows[r].accuracy.assign(cfg.seeds.size(), 0.0);
    chunks.push_back(iid_chunks(pool, splits[r], cfg.stream.seed));
  }
  const MethodSpec spec = resolve_method(MethodId::kCumulativeAll);
  const unsigned threads = max_threads == 0 ? thread_cap_from_env() : max_threads;
  parallel_for(splits.size() * cfg.seeds.size(), threads, [&](std::size_t job) {
    const std::size_t r = job / cfg.seeds.size();
    const std::size_t s = job % cfg.seeds.size();
    const std::uint32_t k = splits[r];
    TrainingSettings settings = cfg.training_settings(MethodId::kCumulativeAll);
    settings.total_iterations = cfg.iid_split.total_iterations;
    settings.num_steps = k;
    settings.per_step_size = std::max<std::uint64_t>(1, pool.train.size() / k);
    settings.compute_multiplier = 1;
    settings.validate();
    BudgetLedger ledger;
    std::optional<StepState> state;
    for (std::uint32_t t = 1; t <= k; ++t) {
      StepResult res = run_step(spec, t, chunks[r], state ? &*state : nullptr, settings, ledger,
                                cfg.seeds[s]);
      state = std::move(res.state);
    }
    rows[r].accuracy[s] = zero_shot_accuracy(state->checkpoint.params, pool.eval_classification,
                                             pool.class_prototypes);
  });
  for (auto& row : rows) {
    double sum = 0.0;
    for (double a : row.accuracy) sum += a;
    row.mean_accuracy = sum / static_cast<double>(row.accuracy.size());
  }
  return rows;
}

nlohmann::json iid_split_to_json(const std::vector<IidSplitRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"splits", r.splits},
                   {"accuracy", r.accuracy},
                   {"mean_accuracy", r.mean_accuracy}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports.

namespace {

struct ReportRow {
  std::string method;
  std::uint64_t seed = 0;
  std::string task;
  std::string metric;
  std::optional<double> value;
  std::uint64_t total_train_macs = 0;
  std::uint64_t total_compute_macs = 0;
  std::uint64_t total_budget_macs = 0;
};

std::vector<ReportRow> report_rows(const RunManifest& m) {
  std::vector<ReportRow> rows;
  auto add = [&](const std::string& task, const std::string& metric, std::optional<double> v) {
    rows.push_back({m.method, m.seed, task, metric, v, m.ledger.total_train_macs(),
                    m.ledger.total_compute_macs(), m.ledger.total_budget_macs()});
  };
  for (const auto& [task, s] : m.summaries) {
    add(task, "in_domain", s.in_domain);
    add(task, "backward", s.backward_transfer);
    add(task, "forward", s.forward_transfer);
  }
  for (std::size_t t = 0; t < m.static_accuracy.size(); ++t) {
    add("static", "static_step_" + std::to_string(t + 1), m.static_accuracy[t]);
  }
  add("static", "static_final", m.static_final);
  return rows;
}

}  // namespace

std::string emit_report(const std::vector<fs::path>& run_dirs, ReportFormat format) {
  if (run_dirs.empty()) throw ReportError("report needs at least one run");
  std::vector<ReportRow> rows;
  for (const auto& dir : run_dirs) {
    RunManifest m;
    try {
      m = load_manifest(dir);
    } catch (const std::exception& e) {
      throw ReportError("cannot read run " + dir.string() + ": " + e.what());
    }
    if (m.status != "complete") throw ReportError("run " + dir.string() + " is not complete");
    auto r = report_rows(m);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (format == ReportFormat::kJson) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) {
      out.push_back({{"method", r.method},
                     {"seed", r.seed},
                     {"task", r.task},
                     {"metric", r.metric},
                     {"value", optional_json(r.value)},
                     {"total_train_macs", r.total_train_macs},
                     {"total_compute_macs", r.total_compute_macs},
                     {"total_budget_macs", r.total_budget_macs}});
    }
    return out.dump(2) + "\n";
  }
  std::string out =
      "method,seed,task,metric,value,total_train_macs,total_compute_macs,total_budget_macs\n";
  char buf[64];
  for (const auto& r : rows) {
    out += r.method + "," + std::to_string(r.seed) + "," + r.task + "," + r.metric + ",";
    if (r.value) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.value);
      out += buf;
    }
    out += "," + std::to_string(r.total_train_macs) + "," + std::to_string(r.total_compute_macs) +
           "," + std::to_string(r.total_budget_macs) + "\n";
  }
  return out;
}

}  // namespace tic
