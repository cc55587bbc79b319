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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gepkit {

// Ordered gender-indicator phrases. Entry 0 is gender index 1 (g1); the order
// fixes the sign of every GEP vector built from these groups.
struct GenderIndicatorSet {
  std::vector<std::string> indicators;
};

struct AttributeSpec {
  std::string id;             // "dress"
  std::string prompt_phrase;  // "in a dress"
  std::string query_phrase;   // "a dress", preposition dropped
  std::string calibration_reference = "an object";
};

struct ContextSet {
  std::vector<std::string> contexts;
};

enum class Setting { kNeutral, kExplicit };

const char* to_string(Setting setting);
Setting parse_setting(std::string_view name);

// A fully-resolved prompt and its grid coordinates. gender_index and
// context_index are 1-based. attribute_id is set iff setting is explicit.
struct PromptSpec {
  std::string text;
  int gender_index = 1;
  std::optional<std::string> attribute_id;
  int context_index = 1;
  Setting setting = Setting::kNeutral;

  bool operator==(const PromptSpec&) const = default;
};

// Context-aligned classifier training sentences: positives[i] and
// negatives[i] share the same (gender, context) cell.
struct TrainingSentenceSets {
  std::string attribute_id;
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
};

// Everything a set-config file describes.
struct PromptSets {
  GenderIndicatorSet genders;
  GenderIndicatorSet training_genders;
  std::vector<AttributeSpec> attributes;
  ContextSet contexts;
  ContextSet training_contexts;
};

void validate(const GenderIndicatorSet& set);
void validate(const ContextSet& set);
void validate(const std::vector<AttributeSpec>& attributes);
void validate(const PromptSets& sets);

GenderIndicatorSet default_genders();           // "A woman", "A man"
GenderIndicatorSet default_training_genders();  // adds "A person"
std::vector<AttributeSpec> default_attributes();
ContextSet default_contexts();
PromptSets default_prompt_sets();

const AttributeSpec& find_attribute(const std::vector<AttributeSpec>& attributes,
                                    std::string_view id);

// "<gender> [<attribute phrase> ]<context>."
std::string compose_prompt(std::string_view gender,
                           std::optional<std::string_view> attribute_phrase,
                           std::string_view context);

// |G|*|C| prompts, gender-major.
std::vector<PromptSpec> build_neutral_prompts(const GenderIndicatorSet& genders,
                                              const ContextSet& contexts);

// |G|*|A|*|C| prompts, ordered gender -> attribute -> context.
std::vector<PromptSpec> build_explicit_prompts(
    const GenderIndicatorSet& genders,
    const std::vector<AttributeSpec>& attributes, const ContextSet& contexts);

TrainingSentenceSets build_training_sentences(const GenderIndicatorSet& genders,
                                              const AttributeSpec& attribute,
                                              const ContextSet& contexts);

// Recovers coordinates from prompt text built over the same sets.
std::optional<PromptSpec> parse_prompt(std::string_view text,
                                       const PromptSets& sets);

// Text for a grid cell; used to look up the prompt embedding of an image.
std::string prompt_text_for(const PromptSets& sets, int gender_index,
                            const std::optional<std::string>& attribute_id,
                            int context_index);

// Set-config files are JSON; see docs/formats.md. Missing keys fall back to
// the defaults, and training_contexts falls back to contexts.
PromptSets parse_prompt_sets(std::string_view json_text);
PromptSets load_prompt_sets(const std::filesystem::path& path);
std::string prompt_sets_to_json(const PromptSets& sets);

// Line-delimited JSON bodies (no header line) for the prompt and training
// sentence manifests.
std::string prompt_manifest_body(const std::vector<PromptSpec>& prompts);
std::vector<PromptSpec> parse_prompt_manifest_body(
    const std::vector<std::string>& lines);
std::string training_manifest_body(const TrainingSentenceSets& sets);

}  // namespace gepkit
