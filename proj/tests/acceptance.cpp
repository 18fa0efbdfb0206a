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

// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 3 5        run criteria 3 and 5 only
//
// Exits 0 only when every selected criterion passes. Criteria 7, 8 and 10
// share one set of reference-stream runs under TIC_ACCEPTANCE_WORKDIR.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tic/eval.hpp"
#include "tic/json_util.hpp"
#include "tic/methods.hpp"
#include "tic/model.hpp"
#include "tic/replay.hpp"
#include "tic/runner.hpp"
#include "tic/schedule.hpp"

namespace fs = std::filesystem;
using namespace tic;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("violated: ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path kWork = TIC_ACCEPTANCE_WORKDIR;

ExperimentConfig reference_config() {
  return load_experiment_config(fs::path(TIC_SOURCE_DIR) / "configs" / "reference.json");
}

// ---------------------------------------------------------------------------
// 1. Gradients against central differences, per parameter group.

// Flat-index ranges of every weight, bias and log_scale group.
std::vector<std::pair<std::size_t, std::size_t>> param_groups(const TwoTowerParams& p) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t at = 0;
  for (Tower t : {Tower::kImage, Tower::kText}) {
    for (const auto& l : p.tower(t)) {
      out.emplace_back(at, at + l.weight.size());
      at += l.weight.size();
      out.emplace_back(at, at + l.bias.size());
      at += l.bias.size();
    }
  }
  out.emplace_back(at, at + 1);
  return out;
}

// Worst over groups of ||a - n|| / max(||a||, ||n||), with groups whose
// gradient vanishes (both norms below 1e-10) compared absolutely.
double worst_group_error(const TwoTowerParams& shape, const std::vector<double>& a,
                         const std::vector<double>& n) {
  double worst = 0.0;
  for (const auto& [lo, hi] : param_groups(shape)) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      diff += (a[i] - n[i]) * (a[i] - n[i]);
      na += a[i] * a[i];
      nn += n[i] * n[i];
    }
    const double scale = std::sqrt(std::max(na, nn));
    worst = std::max(worst, scale < 1e-10 ? std::sqrt(diff) : std::sqrt(diff) / scale);
  }
  return worst;
}

Outcome gradient_suite() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2026, 1);
  const int instances = 24;
  double worst_clip = 0.0, worst_lwf = 0.0;
  for (int k = 0; k < instances; ++k) {
    const std::size_t n = 2 + rng.below(3);
    const std::size_t di = 2 + rng.below(7), dt = 2 + rng.below(7);
    const std::size_t h = 2 + rng.below(7), e = 2 + rng.below(7);
    ModelDims dims = ModelDims::two_layer(di, dt, h, e);
    if (k % 4 == 3) dims = ModelDims{{di, h, h, e}, {dt, e}};
    TwoTowerParams student = init_params(dims, 1000 + k);
    student.log_scale = rng.uniform(0.0, 3.0);
    TwoTowerParams teacher = init_params(dims, 5000 + k);
    teacher.log_scale = rng.uniform(0.0, 3.0);
    const Matrix img = random_matrix(n, di, rng);
    const Matrix txt = random_matrix(n, dt, rng);
    const double lambda = rng.uniform(0.2, 2.0);
    const std::vector<double> x0 = student.flatten();

    TwoTowerParams probe = student;
    const auto clip_fd = finite_diff_grad(
        [&](std::span<const double> x) {
          probe.unflatten(x);
          return clip_loss_and_grads(probe, img, txt).loss;
        },
        x0, 1e-6);
    worst_clip = std::max(worst_clip, worst_group_error(student,
                                                        clip_loss_and_grads(student, img, txt)
                                                            .grads.flatten(),
                                                        clip_fd));
    const auto lwf_fd = finite_diff_grad(
        [&](std::span<const double> x) {
          probe.unflatten(x);
          return lwf_penalty_and_grads(teacher, probe, img, txt, lambda).loss;
        },
        x0, 1e-6);
    worst_lwf = std::max(
        worst_lwf,
        worst_group_error(student,
                          lwf_penalty_and_grads(teacher, student, img, txt, lambda).grads.flatten(),
                          lwf_fd));
  }
  const double secs = seconds_since(t0);
  out.note(std::to_string(instances) + " instances, worst relative error clip " +
           fmt("%.2e", worst_clip) + ", lwf " + fmt("%.2e", worst_lwf) + ", " +
           fmt("%.2f", secs) + " s");
  out.require(worst_clip <= 1e-4, "clip gradient error <= 1e-4");
  out.require(worst_lwf <= 1e-4, "lwf gradient error <= 1e-4");
  out.require(secs < 10.0, "runtime < 10 s");
  return out;
}

// ---------------------------------------------------------------------------
// 2. Loss identities.

Outcome loss_identities() {
  Outcome out;
  Rng rng(7, 7);
  const auto dims = ModelDims::two_layer(6, 5, 8, 4);
  const auto p = init_params(dims, 11);
  const double single = clip_loss_and_grads(p, random_matrix(1, 6, rng), random_matrix(1, 5, rng)).loss;
  out.require(single == 0.0, "N=1 loss is exactly 0 (got " + fmt("%.3g", single) + ")");
  double worst = 0.0;
  for (std::size_t n : {2u, 4u, 8u}) {
    // Repeated rows give identical embeddings, so every logit is equal.
    const Matrix img_row = random_matrix(1, 6, rng), txt_row = random_matrix(1, 5, rng);
    Matrix img(n, 6), txt(n, 5);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(img_row.row(0).begin(), img_row.row(0).end(), img.row(i).begin());
      std::copy(txt_row.row(0).begin(), txt_row.row(0).end(), txt.row(i).begin());
    }
    worst = std::max(worst, std::abs(clip_loss_and_grads(p, img, txt).loss - std::log(double(n))));
  }
  out.note("uniform-logit |loss - ln N| max " + fmt("%.1e", worst));
  out.require(worst <= 1e-9, "uniform logits give ln N within 1e-9");
  const double lwf =
      lwf_penalty_and_grads(p, p, random_matrix(8, 6, rng), random_matrix(8, 5, rng), 1.0).loss;
  out.note("self-distillation penalty " + fmt("%.1e", lwf));
  out.require(std::abs(lwf) <= 1e-12, "teacher == student gives penalty 0 within 1e-12");
  return out;
}

// ---------------------------------------------------------------------------
// 3. Replay plans.

std::vector<std::uint64_t> counts(BufferPolicy pol, std::uint32_t t, std::uint64_t d) {
  const std::vector<std::uint64_t> sizes(t, d);
  std::vector<std::uint64_t> c;
  for (const auto& [step, n] : plan_replay(pol, t, d, sizes).per_source_counts) c.push_back(n);
  return c;
}

Outcome replay_plans() {
  Outcome out;
  const std::uint64_t d = 2400;
  out.require(counts(BufferPolicy::kExp, 3, d) == std::vector<std::uint64_t>{d / 2, d / 2},
              "Exp t=3 -> [D/2, D/2]");
  out.require(counts(BufferPolicy::kExp, 4, d) == std::vector<std::uint64_t>{d / 4, d / 4, d / 2},
              "Exp t=4 -> [D/4, D/4, D/2]");
  out.require(counts(BufferPolicy::kEqual, 4, d) ==
                  std::vector<std::uint64_t>{d / 3, d / 3, d / 3},
              "Equal t=4 -> [D/3, D/3, D/3]");
  std::uint64_t checked = 0, worst_excess = 0;
  bool ok = true;
  for (std::uint32_t t = 1; t <= 10; ++t) {
    std::vector<std::uint64_t> sizes;
    for (std::uint64_t dd = 1; dd <= 10000; ++dd) {
      sizes.assign(t, dd);
      for (auto pol : {BufferPolicy::kExp, BufferPolicy::kEqual}) {
        const auto total = plan_replay(pol, t, dd, sizes).total();
        ++checked;
        if (total > 2 * dd) {
          ok = false;
          worst_excess = std::max(worst_excess, total - 2 * dd);
        }
      }
    }
  }
  out.note(std::to_string(checked) + " plans swept over t <= 10, D <= 10000");
  out.require(ok, "Exp/Equal totals <= 2D (worst excess " + std::to_string(worst_excess) + ")");
  return out;
}

// ---------------------------------------------------------------------------
// 4. Ledger totals at T = 7.

ExperimentConfig small_config(std::uint32_t steps) {
  ExperimentConfig cfg;
  cfg.stream.num_steps = steps;
  cfg.stream.per_step_train_size = 128;
  cfg.stream.per_step_eval_size = 32;
  cfg.stream.image_dim = 8;
  cfg.stream.text_dim = 6;
  cfg.stream.latent_dim = 4;
  cfg.stream.class_birth_schedule = {{1, 4}, {2, 2}};
  cfg.stream.static_class_count = 2;
  cfg.stream.static_holdout_size = 32;
  cfg.model.hidden_dim = 12;
  cfg.model.embed_dim = 6;
  cfg.total_iterations = 20ull * steps;
  cfg.batch_size = 32;
  cfg.schedule.warmup_iters = 5;
  cfg.seeds = {0};
  return cfg;
}

BudgetLedger ledger_for(const ExperimentConfig& cfg, const std::vector<TimestepDataset>& stream,
                        MethodId id) {
  const TrainingSettings s = cfg.training_settings(id);
  const MethodSpec spec = resolve_method(id);
  BudgetLedger ledger;
  std::optional<StepState> state;
  for (std::uint32_t t = 1; t <= s.num_steps; ++t) {
    state = run_step(spec, t, stream, state ? &*state : nullptr, s, ledger, 0).state;
  }
  return ledger;
}

Outcome ledger_totals() {
  Outcome out;
  const ExperimentConfig cfg = small_config(7);
  const auto stream = generate_stream(cfg.stream);
  const auto oracle = ledger_for(cfg, stream, MethodId::kOracle);
  const std::uint64_t c = oracle.entries().front().budget_macs;
  bool uniform = true;
  for (const auto& e : oracle.entries()) uniform = uniform && e.budget_macs == c;
  out.require(uniform, "every step has the same budget C");
  out.require(oracle.total_compute_macs() == 28 * c, "Oracle total == 28 C");
  for (MethodId id : {MethodId::kSequential, MethodId::kCumulativeAll, MethodId::kCumulativeExp,
                      MethodId::kCumulativeEqual}) {
    out.require(ledger_for(cfg, stream, id).total_compute_macs() == 7 * c,
                to_string(id) + " total == 7 C");
  }
  const auto lwf = ledger_for(cfg, stream, MethodId::kLwf);
  const double ratio = double(lwf.total_compute_macs()) / double(7 * c);
  out.note("C = " + std::to_string(c) + " MACs; LwF total = " + fmt("%.4f", ratio) + " x 7C");
  out.require(ratio >= 1.15 && ratio <= 1.25, "LwF total within [1.15, 1.25] x 7C");
  return out;
}

// ---------------------------------------------------------------------------
// 5. Schedule values.

Outcome schedule_values() {
  Outcome out;
  ScheduleConfig c;
  c.kind = ScheduleKind::kWarmupCosine;
  c.max_lr = 3e-3;
  c.min_lr = 1e-5;
  c.warmup_iters = 100;
  c.total_iters = 1001;
  out.require(lr_at(c, c.warmup_iters - 1, true) == c.max_lr, "warmup endpoint == max_lr");
  const double mid = lr_at(c, 100 + 450, true);
  out.note("cosine midpoint error " + fmt("%.1e", std::abs(mid - 0.5 * (c.max_lr + c.min_lr))));
  out.require(std::abs(mid - 0.5 * (c.max_lr + c.min_lr)) <= 1e-12,
              "cosine midpoint == (max + min) / 2 within 1e-12");
  c.kind = ScheduleKind::kConstCosine;
  c.total_iters = 1000;
  c.decay_fraction = 0.2;
  bool flat = true;
  for (std::uint64_t i = c.warmup_iters; i < 800; ++i) flat = flat && lr_at(c, i, true) == c.max_lr;
  for (std::uint64_t i = 0; i < 800; ++i) flat = flat && lr_at(c, i, false) == c.max_lr;
  out.require(flat, "const_cosine holds max_lr through 80% of iterations");
  out.require(lr_at(c, 900, true) < c.max_lr, "const_cosine decays afterwards");
  return out;
}

// ---------------------------------------------------------------------------
// 6. Metric oracles.

Outcome metric_oracles() {
  Outcome out;
  Rng rng(99, 6);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    PerformanceMatrix m;
    m.num_steps = static_cast<std::uint32_t>(1 + rng.below(10));
    const std::uint32_t t = m.num_steps;
    for (std::uint32_t k = 0; k < t * t; ++k) m.entries.push_back(rng.uniform());
    std::vector<double> diag, lower, upper;
    for (std::uint32_t i = 0; i < t; ++i)
      for (std::uint32_t j = 0; j < t; ++j)
        (i == j ? diag : i > j ? lower : upper).push_back(m.at(i, j));
    const auto mean = [](const std::vector<double>& v) {
      return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
    };
    const EvalSummary s = summarize(m);
    worst = std::max(worst, std::abs(s.in_domain - mean(diag)));
    if (t > 1) {
      worst = std::max(worst, std::abs(*s.backward_transfer - mean(lower)));
      worst = std::max(worst, std::abs(*s.forward_transfer - mean(upper)));
    } else {
      out.require(!s.backward_transfer && !s.forward_transfer, "T=1 has no transfer summaries");
    }
  }
  out.note("summarize max deviation " + fmt("%.1e", worst));
  out.require(worst <= 1e-12, "summarize matches direct averaging within 1e-12");

  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(64), d = 1 + rng.below(12);
    const Matrix q = l2_normalize_rows(random_matrix(n, d, rng));
    Matrix g = l2_normalize_rows(random_matrix(n, d, rng));
    for (std::size_t i = 0; i < n; i += 2) {
      for (std::size_t k = 0; k < d; ++k) g(i, k) = q(i, k) + 0.3 * g(i, k);
    }
    g = l2_normalize_rows(g);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_sim = -INFINITY;
      for (std::size_t j = 0; j < n; ++j) {
        double sim = 0.0;
        for (std::size_t k = 0; k < d; ++k) sim += q(i, k) * g(j, k);
        if (sim > best_sim) {
          best_sim = sim;
          best = j;
        }
      }
      hits += best == i;
    }
    if (recall_at_1(q, g) != double(hits) / double(n)) ++mismatches;
  }
  out.note("recall@1 mismatches " + std::to_string(mismatches) + "/100");
  out.require(mismatches == 0, "recall_at_1 equals brute force exactly");
  return out;
}

// ---------------------------------------------------------------------------
// 7, 8, 10. Reference-stream runs, shared.

struct ReferenceRuns {
  ExperimentConfig cfg;
  LoadedStream stream;
  std::map<std::string, std::vector<RunManifest>> by_method;  // seed order of cfg.seeds
  double seconds = 0.0;
  fs::path out_dir;

  double mean_summary(const std::string& method, const std::string& task,
                      const std::string& which) const {
    double s = 0.0;
    const auto& runs = by_method.at(method);
    for (const auto& m : runs) {
      const EvalSummary& e = m.summaries.at(task);
      s += which == "in_domain" ? e.in_domain
           : which == "backward" ? *e.backward_transfer
                                 : *e.forward_transfer;
    }
    return s / double(runs.size());
  }
};

const ReferenceRuns& reference_runs() {
  static std::optional<ReferenceRuns> cache;
  if (cache) return *cache;
  ReferenceRuns r;
  r.cfg = reference_config();
  r.out_dir = kWork / "reference";
  const auto t0 = std::chrono::steady_clock::now();
  fs::remove_all(r.out_dir);
  write_stream(r.cfg.stream, r.cfg.merge_first_k, r.out_dir / "stream");
  r.stream = load_stream(r.out_dir / "stream");
  for (auto& m : run_experiment(r.cfg, r.stream, r.out_dir / "runs")) {
    r.by_method[m.method].push_back(std::move(m));
  }
  for (auto& [method, runs] : r.by_method) {
    std::sort(runs.begin(), runs.end(),
              [](const RunManifest& a, const RunManifest& b) { return a.seed < b.seed; });
  }
  r.seconds = seconds_since(t0);
  cache = std::move(r);
  return *cache;
}

const char* kTask = "retrieval";

Outcome reference_ordering() {
  Outcome out;
  const ReferenceRuns& r = reference_runs();
  const auto bwt = [&](const char* m) { return r.mean_summary(m, kTask, "backward"); };
  const double id_seq = r.mean_summary("sequential", kTask, "in_domain");
  const double id_all = r.mean_summary("cumulative_all", kTask, "in_domain");
  out.note("BWT seq " + fmt("%.4f", bwt("sequential")) + ", cum_all " +
           fmt("%.4f", bwt("cumulative_all")) + ", patching " + fmt("%.4f", bwt("patching")) +
           ", cum_exp " + fmt("%.4f", bwt("cumulative_exp")) + ", cum_equal " +
           fmt("%.4f", bwt("cumulative_equal")) + "; in-domain seq " + fmt("%.4f", id_seq) +
           ", cum_all " + fmt("%.4f", id_all) + "; " + fmt("%.0f", r.seconds) + " s");
  out.require(bwt("cumulative_all") > bwt("sequential"), "BWT(Cumulative-All) > BWT(Sequential)");
  out.require(std::abs(id_seq - id_all) <= 0.03, "in-domain Sequential within 3 points of Cumulative-All");
  out.require(bwt("patching") >= bwt("sequential"), "BWT(Patching) >= BWT(Sequential)");
  out.require(bwt("cumulative_equal") >= bwt("cumulative_exp"),
              "BWT(Cumulative-Equal) >= BWT(Cumulative-Exp)");
  out.require(r.seconds < 15 * 60, "runtime < 15 min");
  return out;
}

Outcome oracle_gap() {
  Outcome out;
  const ReferenceRuns& r = reference_runs();
  const auto& all = r.by_method.at("cumulative_all");
  const auto& oracle = r.by_method.at("oracle");
  double s_all = 0.0, s_oracle = 0.0;
  bool macs_ok = true;
  const std::uint64_t t = r.cfg.effective_steps();
  for (std::size_t i = 0; i < all.size(); ++i) {
    s_all += *all[i].static_final;
    s_oracle += *oracle[i].static_final;
    // MACs(all) <= 2 / (T + 1) * MACs(oracle), in integers.
    macs_ok = macs_ok && (t + 1) * all[i].ledger.total_compute_macs() <=
                             2 * oracle[i].ledger.total_compute_macs();
  }
  s_all /= double(all.size());
  s_oracle /= double(oracle.size());
  const double ratio = double(all[0].ledger.total_compute_macs()) /
                       double(oracle[0].ledger.total_compute_macs());
  out.note("static final cum_all " + fmt("%.4f", s_all) + ", oracle " + fmt("%.4f", s_oracle) +
           "; MAC ratio " + fmt("%.4f", ratio) + " vs bound " + fmt("%.4f", 2.0 / double(t + 1)));
  out.require(std::abs(s_all - s_oracle) <= 0.03, "static-task gap <= 3 points");
  out.require(macs_ok, "Cumulative-All MACs <= 2/(T+1) x Oracle MACs");
  return out;
}

Outcome forward_decay() {
  Outcome out;
  const ReferenceRuns& r = reference_runs();
  const auto& runs = r.by_method.at("oracle");
  const std::uint32_t t = r.cfg.effective_steps();
  std::vector<double> mean(t * t, 0.0);
  for (const auto& m : runs) {
    const auto pm = matrix_from_json(json_util::read_json(
        r.out_dir / "runs" / run_dir_name("oracle", m.seed) / m.metric_files.at(kTask).json));
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += pm.entries[k] / double(runs.size());
  }
  std::string rows;
  for (std::uint32_t i = 0; i < t; ++i) {
    rows += (i ? " | " : "");
    for (std::uint32_t j = i + 1; j < t; ++j) {
      rows += fmt("%.4f ", mean[i * t + j]);
      if (j + 1 < t) {
        out.require(mean[i * t + j + 1] <= mean[i * t + j],
                    "E[" + std::to_string(i + 1) + "][" + std::to_string(j + 2) + "] <= E[" +
                        std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]");
      }
    }
  }
  out.note("Oracle future-step retrieval by row: " + rows);
  return out;
}

// ---------------------------------------------------------------------------
// 9. IID split.

Outcome iid_split() {
  Outcome out;
  const ExperimentConfig cfg = reference_config();
  const auto rows = iid_split_experiment(cfg, {1, 2, 4, 8});
  const double base = rows.front().mean_accuracy;
  std::string acc;
  for (const auto& row : rows) {
    acc += "k=" + std::to_string(row.splits) + " " + fmt("%.4f", row.mean_accuracy) + " ";
    if (row.splits != 1) {
      out.require(std::abs(row.mean_accuracy - base) <= 0.02,
                  "|acc(" + std::to_string(row.splits) + ") - acc(1)| <= 2 points");
    }
  }
  out.note(acc);
  return out;
}

// ---------------------------------------------------------------------------
// 11. Determinism and persistence.

nlohmann::json without_wall_clock(nlohmann::json j) {
  j.erase("wall_clock_seconds");
  for (auto& s : j.at("steps")) s.erase("wall_clock_seconds");
  return j;
}

// Compares two run directories file by file; manifests modulo wall clock.
bool same_run(const fs::path& a, const fs::path& b, std::string& why) {
  std::set<fs::path> files_a, files_b;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) files_a.insert(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) files_b.insert(fs::relative(e.path(), b));
  if (files_a != files_b) {
    why = "file sets differ under " + a.filename().string();
    return false;
  }
  for (const auto& rel : files_a) {
    const bool same =
        rel == kRunManifestName
            ? without_wall_clock(json_util::read_json(a / rel)) ==
                  without_wall_clock(json_util::read_json(b / rel))
            : slurp(a / rel) == slurp(b / rel);
    if (!same) {
      why = (a.filename() / rel).string() + " differs";
      return false;
    }
  }
  return true;
}

Outcome determinism() {
  Outcome out;
  const fs::path root = kWork / "determinism";
  fs::remove_all(root);
  std::string why;

  // Full reruns and kill-and-resume on a small stream, every method, both schedules.
  std::size_t compared = 0;
  for (ScheduleKind kind : {ScheduleKind::kWarmupCosine, ScheduleKind::kConstCosine}) {
    ExperimentConfig cfg = small_config(4);
    cfg.schedule.kind = kind;
    const fs::path base = root / to_string(kind);
    write_stream(cfg.stream, cfg.merge_first_k, base / "stream");
    const LoadedStream stream = load_stream(base / "stream");
    for (MethodId id : all_methods()) {
      const std::string m = to_string(id);
      run_method(cfg, stream, m, 3, base / "first" / m);
      run_method(cfg, stream, m, 3, base / "second" / m);
      out.require(same_run(base / "first" / m, base / "second" / m, why), "rerun: " + why);
      for (std::uint32_t stop : {1u, 2u, 3u}) {
        const fs::path part = base / ("resume" + std::to_string(stop)) / m;
        RunOptions opts;
        opts.stop_after_step = stop;
        run_method(cfg, stream, m, 3, part, opts);
        run_method(cfg, stream, m, 3, part);
        out.require(same_run(base / "first" / m, part, why), "resume: " + why);
      }
      compared += 4;
    }
  }

  // A reference-stream rerun against the criterion 7 runs.
  const ReferenceRuns& r = reference_runs();
  for (const char* m : {"sequential", "patching"}) {
    const fs::path again = root / "reference" / m;
    run_method(r.cfg, r.stream, m, 0, again);
    out.require(same_run(r.out_dir / "runs" / run_dir_name(m, 0), again, why),
                "reference rerun: " + why);
    ++compared;
  }

  // Checkpoint save/load mid-training continues bit for bit.
  {
    const ExperimentConfig cfg = small_config(2);
    const auto stream = generate_stream(cfg.stream);
    auto ck = Checkpoint::fresh(init_params(cfg.training_settings(MethodId::kSequential).dims, 1),
                                "sequential");
    std::vector<RecordRef> refs;
    for (std::uint32_t i = 0; i < 32; ++i) refs.push_back({0, i});
    const auto [img, txt] = gather_batch(stream, refs);
    for (int i = 0; i < 5; ++i) train_minibatch(ck, img, txt, 1e-2);
    save_checkpoint(root / "mid.ckpt", ck);
    Checkpoint resumed = load_checkpoint(root / "mid.ckpt");
    for (int i = 0; i < 5; ++i) {
      train_minibatch(ck, img, txt, 1e-2);
      train_minibatch(resumed, img, txt, 1e-2);
    }
    out.require(resumed == ck, "checkpoint round trip continues bit for bit");
  }
  out.note(std::to_string(compared) + " run comparisons");
  return out;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "gradient suite", gradient_suite},
      {2, "loss identities", loss_identities},
      {3, "replay plans", replay_plans},
      {4, "budget ledger at T=7", ledger_totals},
      {5, "schedule values", schedule_values},
      {6, "metric oracles", metric_oracles},
      {7, "reference-stream ordering", reference_ordering},
      {8, "oracle gap and compute", oracle_gap},
      {9, "IID split", iid_split},
      {10, "forward-transfer decay", forward_decay},
      {11, "determinism and persistence", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  fs::create_directories(kWork);
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += o.pass ? 0 : 1;
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
