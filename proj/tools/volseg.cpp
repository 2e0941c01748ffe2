// Copyright 2026 The VolSeg Authors. All Rights Reserved.
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
//
// volseg: one binary driving the whole pipeline. Stages communicate only
// through files, so any stage can rerun or move to another machine, and a
// manifest written after every successful run records the resolved
// configuration plus digests of every input that shaped the outputs.
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 data
// contract error, 1 anything else.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "volseg/config.hpp"
#include "volseg/errors.hpp"
#include "volseg/pipeline.hpp"
#include "volseg/version.hpp"

namespace {

// Resolution order: schema defaults, then the config file, then --opts in
// command line order, then --seed, and finally environment overrides, so
// the environment always has the last word.
volseg::PipelineConfig resolve_config(const std::string& config_file,
                                      const std::vector<std::string>& opts,
                                      bool seed_set, std::int64_t seed) {
  volseg::PipelineConfig config = config_file.empty()
                                      ? volseg::PipelineConfig::defaults()
                                      : volseg::load_config(config_file);
  if (opts.size() % 2 != 0) {
    throw volseg::ConfigError(
        "--opts expects KEY VALUE pairs, got an odd number of tokens");
  }
  volseg::ConfigDelta delta;
  for (std::size_t i = 0; i + 1 < opts.size(); i += 2) {
    delta.emplace_back(opts[i], opts[i + 1]);
  }
  volseg::apply_overrides(config, delta);
  if (seed_set) {
    volseg::apply_overrides(config, {{"SYSTEM.SEED", std::to_string(seed)}});
  }
  volseg::apply_env_overrides(config);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"volumetric segmentation pipeline"};
  app.require_subcommand(1);

  std::string config_file;
  std::vector<std::string> opts;
  std::string manifest_out;
  std::int64_t seed = 0;
  app.add_option("--config-file", config_file,
                 "configuration file in canonical KEY: value form");
  // Exactly one KEY VALUE pair per use keeps flow-list values like
  // "[4, 8, 8]" intact; greedy multi-value options would split them.
  app.add_option("--opts", opts,
                 "dotted-key override as one KEY VALUE pair, repeatable")
      ->type_size(2)
      ->allow_extra_args(false);
  CLI::Option* seed_opt =
      app.add_option("--seed", seed, "override SYSTEM.SEED for this run");
  app.add_option("--manifest-out", manifest_out,
                 "manifest path (default: OUTPUT_PATH/manifest.json)");
  app.set_version_flag("--version", volseg::kVersion);

  CLI::App* cmd_plan =
      app.add_subcommand("plan", "write the chunk plan for the dataset");
  CLI::App* cmd_sample =
      app.add_subcommand("sample", "draw augmented training windows");
  std::int64_t count = 1;
  cmd_sample->add_option("--count", count, "number of windows to draw");
  CLI::App* cmd_encode = app.add_subcommand(
      "encode", "encode the label volume into training targets");
  CLI::App* cmd_infer = app.add_subcommand(
      "infer", "run sliding window inference with the configured predictor");
  CLI::App* cmd_decode = app.add_subcommand(
      "decode", "turn a prediction volume into semantic or instance labels");
  CLI::App* cmd_eval =
      app.add_subcommand("eval", "score predictions against ground truth");
  CLI::App* cmd_export =
      app.add_subcommand("export", "write PGM slices of a volume");
  for (CLI::App* sub : {cmd_plan, cmd_sample, cmd_encode, cmd_infer,
                        cmd_decode, cmd_eval, cmd_export}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const volseg::PipelineConfig config =
        resolve_config(config_file, opts, seed_opt->count() > 0, seed);

    const auto start = std::chrono::steady_clock::now();
    std::string command;
    volseg::StageResult result;
    if (*cmd_plan) {
      command = "plan";
      result = volseg::cmd_plan(config);
    } else if (*cmd_sample) {
      command = "sample";
      result = volseg::cmd_sample(config, count);
    } else if (*cmd_encode) {
      command = "encode";
      result = volseg::cmd_encode(config);
    } else if (*cmd_infer) {
      command = "infer";
      result = volseg::cmd_infer(config);
    } else if (*cmd_decode) {
      command = "decode";
      result = volseg::cmd_decode(config);
    } else if (*cmd_eval) {
      command = "eval";
      result = volseg::cmd_eval(config);
    } else if (*cmd_export) {
      command = "export";
      result = volseg::cmd_export(config);
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();

    const std::string manifest_path =
        manifest_out.empty()
            ? (std::filesystem::path(config.str_at("OUTPUT_PATH")) /
               "manifest.json")
                  .string()
            : manifest_out;
    volseg::write_run_manifest(
        volseg::make_run_manifest(command, config, result, elapsed),
        manifest_path);

    if (!result.text.empty()) std::printf("%s\n", result.text.c_str());
    return 0;
  } catch (const volseg::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const volseg::FormatError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 4;
  } catch (const volseg::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 4;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
