/* Copyright 2026 The gepkit Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gepkit/artificial.hpp"
#include "gepkit/classifier.hpp"
#include "gepkit/error.hpp"
#include "gepkit/estimators.hpp"
#include "gepkit/prompt_forge.hpp"

namespace gepkit {

// Everything one pipeline run needs. Relative paths in the file are resolved
// against the directory holding the file.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string config_hash;  // FNV-1a of the canonical JSON, output_dir excluded
  std::filesystem::path output_dir;

  PromptSets sets;
  std::optional<std::filesystem::path> store;
  std::optional<std::filesystem::path> annotations;
  std::optional<std::string> model_tag;
  std::string label = "model";

  std::vector<Estimator> estimators = {Estimator::kSimilarity, Estimator::kCalibrated,
                                       Estimator::kClassifier};
  std::vector<Setting> settings = {Setting::kNeutral, Setting::kExplicit};
  TrainerConfig trainer;
  bool clipscore = false;
  double clipscore_multiplier = 100.0;
  std::vector<std::filesystem::path> frequency_tables;

  std::vector<DifferenceScale> scales = default_scales();
  std::size_t per_scale = 10;
  std::size_t z = 40;
  std::optional<std::filesystem::path> artificial_dataset;
  bool stratified = false;

  // "# config_hash=...", "# seed=..."
  std::vector<std::string> preamble() const;
  std::vector<std::pair<std::string, std::string>> header_fields() const;
};

RunConfig parse_run_config(std::string_view json_text,
                           const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Each command returns the files it wrote, in write order.
std::vector<std::filesystem::path> cmd_prompts(const RunConfig& config);
std::vector<std::filesystem::path> cmd_train(const RunConfig& config);
std::vector<std::filesystem::path> cmd_estimate(const RunConfig& config);
std::vector<std::filesystem::path> cmd_score(const RunConfig& config);
std::vector<std::filesystem::path> cmd_artificial(const RunConfig& config);
std::vector<std::filesystem::path> cmd_eval(const RunConfig& config);
std::vector<std::filesystem::path> cmd_report(const RunConfig& config);

// 0 ok, 1 other failure, 2 config, 3 data, 4 degenerate statistic.
int exit_code_for(ErrorClass cls);

// Full command line entry point; never throws.
int run_cli(const std::vector<std::string>& args);

}  // namespace gepkit
