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

#include "gepkit/prompt_forge.hpp"

#include <fmt/format.h>

#include <json.hpp>
#include <set>

#include "gepkit/error.hpp"
#include "gepkit/text_io.hpp"

namespace gepkit {

using nlohmann::json;

const char* to_string(Setting setting) {
  return setting == Setting::kNeutral ? "neutral" : "explicit";
}

Setting parse_setting(std::string_view name) {
  if (name == "neutral") return Setting::kNeutral;
  if (name == "explicit") return Setting::kExplicit;
  throw DataError(fmt::format("unknown setting '{}'", name));
}

namespace {

void require_unique_nonempty(const std::vector<std::string>& items,
                             std::string_view what) {
  if (items.empty()) throw ConfigError(fmt::format("{} set is empty", what));
  std::set<std::string_view> seen;
  for (const auto& item : items) {
    if (item.empty()) {
      throw ConfigError(fmt::format("{} set has an empty entry", what));
    }
    if (!seen.insert(item).second) {
      throw ConfigError(fmt::format("{} set repeats '{}'", what, item));
    }
  }
}

}  // namespace

void validate(const GenderIndicatorSet& set) {
  require_unique_nonempty(set.indicators, "gender indicator");
}

void validate(const ContextSet& set) {
  require_unique_nonempty(set.contexts, "context");
}

void validate(const std::vector<AttributeSpec>& attributes) {
  std::set<std::string_view> seen;
  for (const auto& a : attributes) {
    if (a.id.empty()) throw ConfigError("attribute with empty id");
    if (!seen.insert(a.id).second) {
      throw ConfigError(fmt::format("attribute id '{}' is not unique", a.id));
    }
    if (a.prompt_phrase.empty() || a.query_phrase.empty()) {
      throw ConfigError(
          fmt::format("attribute '{}' needs prompt_phrase and query_phrase", a.id));
    }
  }
}

void validate(const PromptSets& sets) {
  validate(sets.genders);
  validate(sets.training_genders);
  validate(sets.attributes);
  validate(sets.contexts);
  validate(sets.training_contexts);
}

GenderIndicatorSet default_genders() { return {{"A woman", "A man"}}; }

GenderIndicatorSet default_training_genders() {
  return {{"A woman", "A man", "A person"}};
}

std::vector<AttributeSpec> default_attributes() {
  return {
      {"boots", "in boots", "boots"},
      {"slippers", "in slippers", "slippers"},
      {"jeans", "in jeans", "jeans"},
      {"shorts", "in shorts", "shorts"},
      {"slacks", "in slacks", "slacks"},
      {"dress", "in a dress", "a dress"},
      {"skirt", "in a skirt", "a skirt"},
      {"suit", "in a suit", "a suit"},
      {"shirt", "in a shirt", "a shirt"},
      {"uniform", "in uniform", "uniform"},
      {"jacket", "in a jacket", "a jacket"},
      {"hat", "in a hat", "a hat"},
      {"tie", "with a tie", "a tie"},
      {"mask", "with a mask", "a mask"},
      {"gloves", "with gloves", "gloves"},
  };
}

ContextSet default_contexts() {
  return {{
      "sitting at a table",
      "sitting on a bed",
      "standing on a skateboard",
      "standing next to a rack",
      "riding a bike",
      "riding a horse",
      "laying on the snow",
      "laying on a couch",
      "walking through a forest",
      "walking down a sidewalk",
      "holding up a smartphone",
      "holding an umbrella",
      "jumping into the air",
      "jumping over a box",
      "running across the park",
      "running on the beach",
  }};
}

PromptSets default_prompt_sets() {
  return {default_genders(), default_training_genders(), default_attributes(),
          default_contexts(), default_contexts()};
}

const AttributeSpec& find_attribute(const std::vector<AttributeSpec>& attributes,
                                    std::string_view id) {
  for (const auto& a : attributes) {
    if (a.id == id) return a;
  }
  throw DataError(fmt::format("unknown attribute '{}'", id));
}

std::string compose_prompt(std::string_view gender,
                           std::optional<std::string_view> attribute_phrase,
                           std::string_view context) {
  std::string text(gender);
  if (attribute_phrase) {
    text += ' ';
    text += *attribute_phrase;
  }
  text += ' ';
  text += context;
  text += '.';
  return text;
}

std::vector<PromptSpec> build_neutral_prompts(const GenderIndicatorSet& genders,
                                              const ContextSet& contexts) {
  validate(genders);
  validate(contexts);
  std::vector<PromptSpec> out;
  out.reserve(genders.indicators.size() * contexts.contexts.size());
  for (std::size_t g = 0; g < genders.indicators.size(); ++g) {
    for (std::size_t c = 0; c < contexts.contexts.size(); ++c) {
      out.push_back({compose_prompt(genders.indicators[g], std::nullopt,
                                    contexts.contexts[c]),
                     static_cast<int>(g + 1), std::nullopt,
                     static_cast<int>(c + 1), Setting::kNeutral});
    }
  }
  return out;
}

std::vector<PromptSpec> build_explicit_prompts(
    const GenderIndicatorSet& genders,
    const std::vector<AttributeSpec>& attributes, const ContextSet& contexts) {
  validate(genders);
  validate(attributes);
  validate(contexts);
  std::vector<PromptSpec> out;
  out.reserve(genders.indicators.size() * attributes.size() *
              contexts.contexts.size());
  for (std::size_t g = 0; g < genders.indicators.size(); ++g) {
    for (const auto& a : attributes) {
      for (std::size_t c = 0; c < contexts.contexts.size(); ++c) {
        out.push_back({compose_prompt(genders.indicators[g], a.prompt_phrase,
                                      contexts.contexts[c]),
                       static_cast<int>(g + 1), a.id, static_cast<int>(c + 1),
                       Setting::kExplicit});
      }
    }
  }
  return out;
}

TrainingSentenceSets build_training_sentences(const GenderIndicatorSet& genders,
                                              const AttributeSpec& attribute,
                                              const ContextSet& contexts) {
  validate(genders);
  validate(std::vector<AttributeSpec>{attribute});
  validate(contexts);
  TrainingSentenceSets out{attribute.id, {}, {}};
  for (const auto& g : genders.indicators) {
    for (const auto& c : contexts.contexts) {
      out.positives.push_back(compose_prompt(g, attribute.prompt_phrase, c));
      out.negatives.push_back(compose_prompt(g, std::nullopt, c));
    }
  }
  return out;
}

std::optional<PromptSpec> parse_prompt(std::string_view text,
                                       const PromptSets& sets) {
  if (text.empty() || text.back() != '.') return std::nullopt;
  std::string_view body = text.substr(0, text.size() - 1);
  const auto& genders = sets.genders.indicators;
  const auto& contexts = sets.contexts.contexts;
  auto context_index = [&](std::string_view rest) -> int {
    for (std::size_t c = 0; c < contexts.size(); ++c) {
      if (rest == contexts[c]) return static_cast<int>(c + 1);
    }
    return 0;
  };
  for (std::size_t g = 0; g < genders.size(); ++g) {
    const std::string& gender = genders[g];
    if (body.size() <= gender.size() || body.substr(0, gender.size()) != gender ||
        body[gender.size()] != ' ') {
      continue;
    }
    std::string_view rest = body.substr(gender.size() + 1);
    if (int c = context_index(rest)) {
      return PromptSpec{std::string(text), static_cast<int>(g + 1), std::nullopt,
                        c, Setting::kNeutral};
    }
    for (const auto& a : sets.attributes) {
      const std::string& phrase = a.prompt_phrase;
      if (rest.size() <= phrase.size() || rest.substr(0, phrase.size()) != phrase ||
          rest[phrase.size()] != ' ') {
        continue;
      }
      if (int c = context_index(rest.substr(phrase.size() + 1))) {
        return PromptSpec{std::string(text), static_cast<int>(g + 1), a.id, c,
                          Setting::kExplicit};
      }
    }
  }
  return std::nullopt;
}

std::string prompt_text_for(const PromptSets& sets, int gender_index,
                            const std::optional<std::string>& attribute_id,
                            int context_index) {
  const auto& genders = sets.genders.indicators;
  const auto& contexts = sets.contexts.contexts;
  if (gender_index < 1 || gender_index > static_cast<int>(genders.size())) {
    throw DataError(fmt::format("gender index {} out of range", gender_index));
  }
  if (context_index < 1 || context_index > static_cast<int>(contexts.size())) {
    throw DataError(fmt::format("context index {} out of range", context_index));
  }
  std::optional<std::string_view> phrase;
  if (attribute_id) phrase = find_attribute(sets.attributes, *attribute_id).prompt_phrase;
  return compose_prompt(genders[gender_index - 1], phrase,
                        contexts[context_index - 1]);
}

namespace {

std::vector<std::string> string_list(const json& j, std::string_view key) {
  if (!j.is_array()) {
    throw ConfigError(fmt::format("'{}' must be an array of strings", key));
  }
  std::vector<std::string> out;
  for (const auto& item : j) {
    if (!item.is_string()) {
      throw ConfigError(fmt::format("'{}' must be an array of strings", key));
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

PromptSets parse_prompt_sets(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("set config is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw ConfigError("set config must be a JSON object");
  PromptSets sets = default_prompt_sets();
  if (j.contains("genders")) sets.genders.indicators = string_list(j["genders"], "genders");
  if (j.contains("training_genders")) {
    sets.training_genders.indicators =
        string_list(j["training_genders"], "training_genders");
  }
  if (j.contains("contexts")) {
    sets.contexts.contexts = string_list(j["contexts"], "contexts");
  }
  if (j.contains("training_contexts")) {
    sets.training_contexts.contexts =
        string_list(j["training_contexts"], "training_contexts");
  } else {
    sets.training_contexts = sets.contexts;
  }
  if (j.contains("attributes")) {
    if (!j["attributes"].is_array()) throw ConfigError("'attributes' must be an array");
    sets.attributes.clear();
    for (const auto& item : j["attributes"]) {
      if (!item.is_object() || !item.contains("id") ||
          !item.contains("prompt_phrase") || !item.contains("query_phrase")) {
        throw ConfigError(
            "each attribute needs string fields id, prompt_phrase, query_phrase");
      }
      try {
        AttributeSpec a;
        a.id = item["id"].get<std::string>();
        a.prompt_phrase = item["prompt_phrase"].get<std::string>();
        a.query_phrase = item["query_phrase"].get<std::string>();
        if (item.contains("calibration_reference")) {
          a.calibration_reference = item["calibration_reference"].get<std::string>();
        }
        sets.attributes.push_back(std::move(a));
      } catch (const json::type_error& e) {
        throw ConfigError(fmt::format("bad attribute entry: {}", e.what()));
      }
    }
  }
  validate(sets);
  return sets;
}

PromptSets load_prompt_sets(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    throw ConfigError("cannot read set config " + path.string());
  }
  try {
    return parse_prompt_sets(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string prompt_sets_to_json(const PromptSets& sets) {
  json j;
  j["genders"] = sets.genders.indicators;
  j["training_genders"] = sets.training_genders.indicators;
  j["contexts"] = sets.contexts.contexts;
  j["training_contexts"] = sets.training_contexts.contexts;
  j["attributes"] = json::array();
  for (const auto& a : sets.attributes) {
    j["attributes"].push_back({{"id", a.id},
                               {"prompt_phrase", a.prompt_phrase},
                               {"query_phrase", a.query_phrase},
                               {"calibration_reference", a.calibration_reference}});
  }
  return j.dump(2) + "\n";
}

std::string prompt_manifest_body(const std::vector<PromptSpec>& prompts) {
  std::string out;
  for (const auto& p : prompts) {
    json j{{"text", p.text},
           {"gender_index", p.gender_index},
           {"context_index", p.context_index},
           {"setting", to_string(p.setting)}};
    j["attribute_id"] = p.attribute_id ? json(*p.attribute_id) : json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<PromptSpec> parse_prompt_manifest_body(
    const std::vector<std::string>& lines) {
  std::vector<PromptSpec> out;
  for (const auto& line : lines) {
    if (trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      PromptSpec p;
      p.text = j.at("text").get<std::string>();
      p.gender_index = j.at("gender_index").get<int>();
      p.context_index = j.at("context_index").get<int>();
      p.setting = parse_setting(j.at("setting").get<std::string>());
      if (!j.at("attribute_id").is_null()) {
        p.attribute_id = j.at("attribute_id").get<std::string>();
      }
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw DataError(fmt::format("bad prompt manifest line: {}", e.what()));
    }
  }
  return out;
}

std::string training_manifest_body(const TrainingSentenceSets& sets) {
  std::string out;
  auto emit = [&](const std::vector<std::string>& texts, int label) {
    for (const auto& t : texts) {
      json j{{"attribute_id", sets.attribute_id}, {"label", label}, {"text", t}};
      out += j.dump();
      out += '\n';
    }
  };
  emit(sets.positives, 1);
  emit(sets.negatives, 0);
  return out;
}

}  // namespace gepkit
