// Copyright 2026 The speechforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "speechforge/explorer/service.hpp"
#include "speechforge/log.hpp"
#include "speechforge/pipeline/commands.hpp"

namespace {

using namespace speechforge;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitFailures = 1;
constexpr int kExitUsage = 2;

pipeline::PipelineConfig load_config(const std::string& path) {
  return path.empty() ? pipeline::PipelineConfig::defaults() : pipeline::PipelineConfig::load(path);
}

int serve(explorer::Service& service, const std::string& bind) {
  const auto [host, port] = explorer::parse_bind(bind);
  // Block the stop signals before any thread exists so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  explorer::HttpServer server(service);
  const int bound = server.bind(host, port);
  server.start();
  std::printf("serving %zu entries on http://%s:%d\n", service.snapshot()->size(), host.c_str(), bound);
  std::fflush(stdout);
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging_from_env();
  CLI::App app{"speechforge: CTC segmentation and speech dataset analysis"};
  app.require_subcommand(1);

  std::string config_path, windows, manifest, audio_root, rules_path, bind = "127.0.0.1:8080", out;
  std::optional<double> threshold, padding;
  std::optional<std::size_t> jobs;

  auto* segment = app.add_subcommand("segment", "align transcripts to long recordings and cut clips");
  segment->add_option("--config", config_path, "pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  segment->add_option("--windows", windows, "comma-separated band widths, e.g. 8000,10000,12000");
  segment->add_option("--threshold", threshold, "minimum confidence score");
  segment->add_option("--padding", padding, "seconds added around each cut");
  segment->add_option("--jobs", jobs, "concurrent recordings")->check(CLI::PositiveNumber);
  segment->add_option("--out", out, "output directory");

  auto* analyze = app.add_subcommand("analyze", "compute metrics, signal stats and dataset statistics");
  analyze->add_option("--manifest", manifest, "input manifest")->required();
  analyze->add_option("--audio-root", audio_root, "base directory for relative audio paths");
  analyze->add_option("--config", config_path, "pipeline config for char-rate bounds")->check(CLI::ExistingFile);
  analyze->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  analyze->add_option("--out", out, "output directory")->required();

  auto* filter = app.add_subcommand("filter", "split a manifest into kept and dropped entries");
  filter->add_option("--manifest", manifest, "input manifest")->required();
  filter->add_option("--rules", rules_path, "rules file (JSON array); defaults to the config's rules");
  filter->add_option("--config", config_path, "pipeline config")->check(CLI::ExistingFile);
  filter->add_option("--out", out, "output directory")->required();

  auto* serve_cmd = app.add_subcommand("serve", "run the explorer HTTP service");
  serve_cmd->add_option("--manifest", manifest, "manifest to explore")->required();
  serve_cmd->add_option("--audio-root", audio_root, "base directory for relative audio paths");
  serve_cmd->add_option("--bind", bind, "host:port to listen on");
  serve_cmd->add_option("--config", config_path, "pipeline config (ui_dir)")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*segment) {
      auto config = load_config(config_path);
      if (!windows.empty()) {
        config.align.window_set = pipeline::parse_window_list(windows);
        config.align.window_frames = config.align.window_set.front();
      }
      if (threshold) config.align.score_threshold = *threshold;
      if (padding) config.padding = *padding;
      if (jobs) config.jobs = *jobs;
      if (!out.empty()) config.output_dir = out;
      const auto summary = pipeline::run_segment(config);
      std::printf("%zu recordings, %zu segments (%.3f h), %zu skipped, %zu failed\n", summary.recordings,
                  summary.segments, summary.hours, summary.skipped, summary.failed);
      return summary.failed > 0 ? kExitFailures : kExitOk;
    }
    if (*analyze) {
      const auto config = load_config(config_path);
      pipeline::AnalyzeOptions options;
      options.manifest = manifest;
      options.audio_root = audio_root;
      options.output_dir = out;
      options.char_rate = config.char_rate;
      options.jobs = jobs.value_or(config.jobs);
      const auto entries = pipeline::run_analyze(options);
      std::printf("analyzed %zu entries into %s\n", entries.size(), out.c_str());
      return kExitOk;
    }
    if (*filter) {
      std::vector<dataset::FilterRule> rules;
      try {
        rules = rules_path.empty() ? load_config(config_path).filter_rules : dataset::load_rules(rules_path);
      } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
      }
      const auto report = pipeline::run_filter(manifest, rules, out);
      std::printf("kept %zu (%.3f h), dropped %zu (%.3f h)\n", report.kept, report.kept_hours, report.dropped,
                  report.dropped_hours);
      return kExitOk;
    }
    if (*serve_cmd) {
      const auto config = load_config(config_path);
      const fs::path manifest_path = manifest;
      const fs::path root = audio_root;
      explorer::Service service([=] { return explorer::DatasetIndex::build(manifest_path, root); }, config.ui_dir);
      return serve(service, bind);
    }
  } catch (const dataset::DatasetError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const pipeline::PipelineError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailures;
  }
  return kExitUsage;
}
