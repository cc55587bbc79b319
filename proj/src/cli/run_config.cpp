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

#include <fmt/format.h>

#include <json.hpp>

#include "gepkit/cli.hpp"
#include "gepkit/embed_store.hpp"
#include "gepkit/seed.hpp"
#include "gepkit/text_io.hpp"

namespace gepkit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kKnownKeys = {
    "seed",       "output_dir", "sets",        "store",      "annotations",
    "model_tag",  "label",      "estimators",  "settings",   "trainer",
    "clipscore",  "clipscore_multiplier",      "frequency_tables",
    "artificial", "stratified"};

const std::vector<std::string> kTrainerKeys = {
    "learning_rate", "max_iterations", "validation_fraction",
    "early_stop_patience", "l2_penalty", "ensemble_size"};

const std::vector<std::string> kArtificialKeys = {"scales", "per_scale", "z", "dataset"};

void reject_unknown(const json& j, const std::vector<std::string>& known,
                    std::string_view where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
    }
  }
}

fs::path resolve(const fs::path& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

fs::path existing(const fs::path& base_dir, const std::string& p, std::string_view what) {
  fs::path path = resolve(base_dir, p);
  if (!fs::exists(path)) {
    throw ConfigError(fmt::format("{} not found: {}", what, path.string()));
  }
  return path;
}

}  // namespace

std::vector<std::string> RunConfig::preamble() const {
  return {"# config_hash=" + config_hash, "# seed=" + std::to_string(seed)};
}

std::vector<std::pair<std::string, std::string>> RunConfig::header_fields() const {
  return {{"config_hash", config_hash}, {"run_seed", std::to_string(seed)}};
}

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("run config is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  reject_unknown(j, kKnownKeys, "run config");

  RunConfig c;
  try {
    json hashed = j;
    hashed.erase("output_dir");
    c.config_hash = hex64(fnv1a64(hashed.dump()));

    c.seed = j.value("seed", std::uint64_t{0});
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string("out")));
    if (j.contains("sets")) {
      c.sets = load_prompt_sets(existing(base_dir, j["sets"].get<std::string>(), "set config"));
    } else {
      c.sets = default_prompt_sets();
    }
    if (j.contains("store")) {
      c.store = resolve(base_dir, j["store"].get<std::string>());
      if (!fs::exists(manifest_path(*c.store))) {
        throw ConfigError(fmt::format("store not found: {}", manifest_path(*c.store).string()));
      }
    }
    if (j.contains("annotations")) {
      c.annotations = existing(base_dir, j["annotations"].get<std::string>(), "annotations");
    }
    if (j.contains("model_tag")) c.model_tag = j["model_tag"].get<std::string>();
    c.label = j.value("label", c.label);
    if (j.contains("estimators")) {
      c.estimators.clear();
      for (const auto& e : j["estimators"]) c.estimators.push_back(parse_estimator(e.get<std::string>()));
    }
    if (j.contains("settings")) {
      c.settings.clear();
      for (const auto& s : j["settings"]) {
        try {
          c.settings.push_back(parse_setting(s.get<std::string>()));
        } catch (const DataError& e) {
          throw ConfigError(e.what());
        }
      }
    }
    if (j.contains("trainer")) {
      const json& t = j["trainer"];
      reject_unknown(t, kTrainerKeys, "trainer");
      c.trainer.learning_rate = t.value("learning_rate", c.trainer.learning_rate);
      c.trainer.max_iterations = t.value("max_iterations", c.trainer.max_iterations);
      c.trainer.validation_fraction = t.value("validation_fraction", c.trainer.validation_fraction);
      c.trainer.early_stop_patience = t.value("early_stop_patience", c.trainer.early_stop_patience);
      c.trainer.l2_penalty = t.value("l2_penalty", c.trainer.l2_penalty);
      c.trainer.ensemble_size = t.value("ensemble_size", c.trainer.ensemble_size);
    }
    c.trainer.validate();
    c.clipscore = j.value("clipscore", false);
    c.clipscore_multiplier = j.value("clipscore_multiplier", 100.0);
    for (const auto& p : j.value("frequency_tables", json::array())) {
      c.frequency_tables.push_back(existing(base_dir, p.get<std::string>(), "frequency table"));
    }
    if (j.contains("artificial")) {
      const json& a = j["artificial"];
      reject_unknown(a, kArtificialKeys, "artificial");
      if (a.contains("scales")) {
        c.scales.clear();
        for (const auto& s : a["scales"]) {
          const double v = s.get<double>();
          if (!(v > 0.0)) throw ConfigError(fmt::format("scale must be positive, got {}", v));
          c.scales.push_back({v});
        }
      }
      c.per_scale = a.value("per_scale", c.per_scale);
      c.z = a.value("z", c.z);
      if (c.z == 0) throw ConfigError("artificial.z must be positive");
      if (a.contains("dataset")) {
        c.artificial_dataset = existing(base_dir, a["dataset"].get<std::string>(), "artificial dataset");
      }
    }
    c.stratified = j.value("stratified", false);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("bad run config value: {}", e.what()));
  }
  if (c.sets.genders.indicators.size() != 2) {
    throw ConfigError("GEP needs exactly two gender indicators");
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) {
    throw ConfigError(fmt::format("run config not found: {}", path.string()));
  }
  return parse_run_config(read_file(path), path.parent_path());
}

}  // namespace gepkit
