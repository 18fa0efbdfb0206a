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

// tic: generate streams, train methods, evaluate runs and emit reports.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tic/json_util.hpp"
#include "tic/runner.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kConfigExit = 1;
constexpr int kRuntimeExit = 2;

std::vector<std::uint32_t> parse_splits(const std::string& text) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<std::uint32_t>(v));
    } catch (const std::exception&) {
      throw tic::ConfigError("--splits expects positive integers, got '" + item + "'");
    }
  }
  if (out.empty()) throw tic::ConfigError("--splits is empty");
  return out;
}

// A run directory, or a directory whose subdirectories are runs.
std::vector<fs::path> expand_runs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::exists(p / tic::kRunManifestName)) {
      out.push_back(p);
      continue;
    }
    std::vector<fs::path> children;
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p)) {
        if (fs::exists(e.path() / tic::kRunManifestName)) children.push_back(e.path());
      }
    }
    if (children.empty()) throw tic::ReportError("no run manifest under " + p.string());
    std::sort(children.begin(), children.end());
    out.insert(out.end(), children.begin(), children.end());
  }
  return out;
}

void print_summary(const tic::RunManifest& m) {
  nlohmann::json j = {{"method", m.method}, {"seed", m.seed}, {"status", m.status}};
  for (const auto& [task, s] : m.summaries) j["summaries"][task] = s;
  j["static_final"] = m.static_final ? nlohmann::json(*m.static_final) : nlohmann::json();
  j["total_train_macs"] = m.ledger.total_train_macs();
  std::cout << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-continual contrastive training on synthetic drifting streams"};
  app.require_subcommand(1);

  std::string config_path, out_dir, data_dir, run_dir, format = "csv", splits = "1,2,4,8";
  std::vector<std::string> methods, runs;
  std::vector<std::uint64_t> seeds;
  std::optional<std::uint32_t> stop_after;

  auto* gen = app.add_subcommand("gen", "Generate a stream into a directory");
  gen->add_option("--config", config_path, "Experiment config JSON")->required();
  gen->add_option("--out", out_dir, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train methods over a generated stream");
  train->add_option("--config", config_path, "Experiment config JSON")->required();
  train->add_option("--data", data_dir, "Stream directory from `gen`")->required();
  train->add_option("--method", methods, "Method id, or `all` (repeatable)")->required();
  train->add_option("--seed", seeds, "Run seed (repeatable; default: config seeds)");
  train->add_option("--out", out_dir, "Directory receiving <method>_seed<k> runs")->required();
  train->add_option("--stop-after-step", stop_after, "Leave a resumable partial run");

  auto* eval = app.add_subcommand("eval", "Recompute the metrics of a run");
  eval->add_option("--run", run_dir, "Run directory")->required();
  eval->add_option("--data", data_dir, "Stream directory")->required();

  auto* report = app.add_subcommand("report", "Tabulate runs");
  report->add_option("--runs", runs, "Run directories or parents of runs")->required();
  report->add_option("--out", out_dir, "Output file")->required();
  report->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* iid = app.add_subcommand("iid-split", "IID-split experiment");
  iid->add_option("--config", config_path, "Experiment config JSON")->required();
  iid->add_option("--splits", splits, "Comma-separated split counts");
  iid->add_option("--out", out_dir, "Optional JSON output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (gen->parsed()) {
      const tic::ExperimentConfig cfg = tic::load_experiment_config(config_path);
      const auto m = tic::write_stream(cfg.stream, cfg.merge_first_k, out_dir);
      std::cout << "wrote " << m.num_steps << " steps to " << out_dir << "\n";
    } else if (train->parsed()) {
      tic::ExperimentConfig cfg = tic::load_experiment_config(config_path);
      const tic::LoadedStream stream = tic::load_stream(data_dir);
      if (!(methods.size() == 1 && methods[0] == "all")) cfg.methods = methods;
      if (!seeds.empty()) cfg.seeds = seeds;
      cfg.validate();
      if (stop_after) {
        for (const auto& method : cfg.methods) {
          for (std::uint64_t seed : cfg.seeds) {
            tic::RunOptions opts;
            opts.stop_after_step = stop_after;
            print_summary(tic::run_method(cfg, stream, method, seed,
                                          fs::path(out_dir) / tic::run_dir_name(method, seed),
                                          opts));
          }
        }
      } else {
        for (const auto& m : tic::run_experiment(cfg, stream, out_dir)) print_summary(m);
      }
    } else if (eval->parsed()) {
      const tic::LoadedStream stream = tic::load_stream(data_dir);
      print_summary(tic::evaluate_run(run_dir, stream));
    } else if (report->parsed()) {
      const auto fmt = format == "json" ? tic::ReportFormat::kJson : tic::ReportFormat::kCsv;
      tic::json_util::write_text(out_dir, tic::emit_report(expand_runs(runs), fmt));
    } else if (iid->parsed()) {
      const tic::ExperimentConfig cfg = tic::load_experiment_config(config_path);
      const auto rows = tic::iid_split_experiment(cfg, parse_splits(splits));
      const nlohmann::json j = tic::iid_split_to_json(rows);
      if (!out_dir.empty()) tic::json_util::write_json(out_dir, j);
      std::cout << j.dump(2) << "\n";
    }
  } catch (const tic::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeExit;
  }
  return 0;
}
