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

#include "gepkit/gep.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <utility>

#include "gepkit/error.hpp"
#include "gepkit/stats.hpp"
#include "gepkit/text_io.hpp"

namespace gepkit {

using nlohmann::json;

const char* to_string(FrequencySource source) {
  switch (source) {
    case FrequencySource::kHuman:
      return "human";
    case FrequencySource::kSimilarity:
      return "similarity";
    case FrequencySource::kCalibrated:
      return "calibrated";
    case FrequencySource::kClassifier:
      return "classifier";
  }
  return "unknown";
}

FrequencySource parse_frequency_source(std::string_view name) {
  if (name == "human") return FrequencySource::kHuman;
  if (name == "similarity") return FrequencySource::kSimilarity;
  if (name == "calibrated") return FrequencySource::kCalibrated;
  if (name == "classifier") return FrequencySource::kClassifier;
  throw DataError(fmt::format("unknown frequency source '{}'", name));
}

FrequencySource source_of(Estimator estimator) {
  switch (estimator) {
    case Estimator::kSimilarity:
      return FrequencySource::kSimilarity;
    case Estimator::kCalibrated:
      return FrequencySource::kCalibrated;
    case Estimator::kClassifier:
      return FrequencySource::kClassifier;
  }
  return FrequencySource::kHuman;
}

int AnnotationRecord::resolved_label() const { return majority_vote(worker_labels); }

std::vector<AnnotationRecord> parse_annotations(std::string_view text) {
  std::vector<AnnotationRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      AnnotationRecord a;
      a.image_id = j.at("image_id").get<std::string>();
      a.attribute_id = j.at("attribute_id").get<std::string>();
      a.worker_labels = j.at("votes").get<std::vector<int>>();
      for (int v : a.worker_labels) {
        if (v != 0 && v != 1) throw DataError("votes must be 0 or 1");
      }
      out.push_back(std::move(a));
    } catch (const json::exception& e) {
      throw DataError(fmt::format("annotation line {}: {}", line_no, e.what()));
    } catch (const DataError& e) {
      throw DataError(fmt::format("annotation line {}: {}", line_no, e.what()));
    }
  }
  return out;
}

FrequencyTable::FrequencyTable(Setting setting, FrequencySource source,
                               std::vector<std::string> attributes, int gender_count)
    : setting_(setting),
      source_(source),
      attributes_(std::move(attributes)),
      gender_count_(gender_count) {
  if (gender_count_ < 1) throw DataError("frequency table needs at least one gender");
  const std::size_t n = attributes_.size() * static_cast<std::size_t>(gender_count_);
  values_.assign(n, 0.0);
  positives_.assign(n, std::nullopt);
  sizes_.assign(n, std::nullopt);
}

std::size_t FrequencyTable::attribute_index(std::string_view id) const {
  for (std::size_t j = 0; j < attributes_.size(); ++j) {
    if (attributes_[j] == id) return j;
  }
  throw DataError(fmt::format("attribute '{}' not in frequency table", id));
}

std::size_t FrequencyTable::cell(int gender, std::size_t attribute) const {
  if (gender < 1 || gender > gender_count_ || attribute >= attributes_.size()) {
    throw DataError(fmt::format("no frequency cell for gender {} attribute #{}",
                                gender, attribute));
  }
  return static_cast<std::size_t>(gender - 1) * attributes_.size() + attribute;
}

double FrequencyTable::value(int gender, std::size_t attribute) const {
  return values_[cell(gender, attribute)];
}

std::optional<std::size_t> FrequencyTable::positives(int gender,
                                                     std::size_t attribute) const {
  return positives_[cell(gender, attribute)];
}

std::optional<std::size_t> FrequencyTable::group_size(int gender,
                                                      std::size_t attribute) const {
  return sizes_[cell(gender, attribute)];
}

void FrequencyTable::set_value(int gender, std::size_t attribute, double value,
                               std::size_t group_size) {
  const std::size_t c = cell(gender, attribute);
  values_[c] = value;
  positives_[c] = std::nullopt;
  sizes_[c] = group_size > 0 ? std::optional<std::size_t>(group_size) : std::nullopt;
}

void FrequencyTable::set_counts(int gender, std::size_t attribute,
                                std::size_t positives, std::size_t group_size) {
  if (group_size == 0 || positives > group_size) {
    throw DataError(fmt::format("invalid count {}/{}", positives, group_size));
  }
  const std::size_t c = cell(gender, attribute);
  values_[c] = static_cast<double>(positives) / static_cast<double>(group_size);
  positives_[c] = positives;
  sizes_[c] = group_size;
}

FrequencyTable frequency_from_annotations(
    std::span<const AnnotationRecord> annotations, const EmbeddingStore& store,
    Setting setting, const std::vector<std::string>& attributes, int gender_count,
    const std::optional<std::string>& model_tag) {
  std::map<std::pair<std::string_view, std::string_view>, int> labels;
  for (const auto& a : annotations) {
    if (!labels.emplace(std::pair<std::string_view, std::string_view>(a.image_id, a.attribute_id),
                        a.resolved_label())
             .second) {
      throw DataError(fmt::format("duplicate annotation for image '{}' attribute '{}'",
                                  a.image_id, a.attribute_id));
    }
  }
  FrequencyTable table(setting, FrequencySource::kHuman, attributes, gender_count);
  table.label = model_tag.value_or("");
  const std::size_t n = attributes.size();
  std::vector<std::size_t> pos(n * static_cast<std::size_t>(gender_count), 0);
  std::vector<std::size_t> size(pos.size(), 0);

  auto label_of = [&](const std::string& image, const std::string& attribute) {
    auto it = labels.find({image, attribute});
    if (it == labels.end()) {
      throw DataError(fmt::format("missing label for image '{}' attribute '{}'", image,
                                  attribute));
    }
    return it->second;
  };

  for (const auto& h : store.headers()) {
    if (h.kind != RecordKind::kImage || h.meta.setting != setting) continue;
    if (model_tag && h.meta.model_tag != model_tag) continue;
    const int g = h.meta.gender_index.value_or(0);
    if (g < 1 || g > gender_count) {
      throw DataError(fmt::format("image '{}' has gender index {} outside 1..{}", h.id,
                                  g, gender_count));
    }
    const std::size_t base = static_cast<std::size_t>(g - 1) * n;
    if (setting == Setting::kNeutral) {
      for (std::size_t j = 0; j < n; ++j) {
        pos[base + j] += static_cast<std::size_t>(label_of(h.id, attributes[j]));
        ++size[base + j];
      }
    } else {
      if (!h.meta.attribute_id) {
        throw DataError(fmt::format("explicit image '{}' has no attribute", h.id));
      }
      std::size_t j = 0;
      while (j < n && attributes[j] != *h.meta.attribute_id) ++j;
      if (j == n) continue;  // attribute outside the requested subset
      pos[base + j] += static_cast<std::size_t>(label_of(h.id, attributes[j]));
      ++size[base + j];
    }
  }
  for (int g = 1; g <= gender_count; ++g) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t c = static_cast<std::size_t>(g - 1) * n + j;
      if (size[c] == 0) {
        throw DataError(fmt::format("no {} images for gender {} attribute '{}'",
                                    to_string(setting), g, attributes[j]));
      }
      table.set_counts(g, j, pos[c], size[c]);
    }
  }
  return table;
}

FrequencyTable frequency_from_estimates(const EstimateReport& report,
                                        Setting setting,
                                        const std::vector<std::string>& attributes,
                                        int gender_count) {
  FrequencyTable table(setting, source_of(report.estimator), attributes, gender_count);
  std::vector<bool> filled(attributes.size() * static_cast<std::size_t>(gender_count),
                           false);
  for (const auto& row : report.rows) {
    if (row.setting != setting) continue;
    std::size_t j = 0;
    while (j < attributes.size() && attributes[j] != row.attribute_id) ++j;
    if (j == attributes.size()) continue;
    table.set_value(row.gender_index, j, row.value, row.z);
    filled[static_cast<std::size_t>(row.gender_index - 1) * attributes.size() + j] = true;
  }
  for (std::size_t c = 0; c < filled.size(); ++c) {
    if (!filled[c]) {
      throw DataError(fmt::format("estimate report lacks gender {} attribute '{}'",
                                  c / attributes.size() + 1,
                                  attributes[c % attributes.size()]));
    }
  }
  return table;
}

std::vector<double> gep_vector(const FrequencyTable& table) {
  if (table.gender_count() != 2) {
    throw DataError(fmt::format("GEP vectors compare exactly 2 genders, table has {}",
                                table.gender_count()));
  }
  std::vector<double> v(table.attributes().size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    auto k1 = table.positives(1, j), k2 = table.positives(2, j);
    auto z1 = table.group_size(1, j), z2 = table.group_size(2, j);
    if (k1 && k2 && z1 && z2) {
      // One rounding: (k1 z2 - k2 z1) / (z1 z2).
      const long long num = static_cast<long long>(*k1 * *z2) -
                            static_cast<long long>(*k2 * *z1);
      v[j] = static_cast<double>(num) / static_cast<double>(*z1 * *z2);
    } else {
      v[j] = table.value(1, j) - table.value(2, j);
    }
  }
  return v;
}

double gep_score(std::span<const double> v) {
  if (v.empty()) throw DegenerateError("GEP score of an empty vector");
  double sum = 0.0;
  for (double x : v) sum += std::abs(x);
  return sum / static_cast<double>(v.size());
}

GepResult compute_gep(const FrequencyTable& table) {
  GepResult r;
  r.label = table.label;
  r.setting = table.setting();
  r.source = table.source();
  r.attributes = table.attributes();
  r.vector = gep_vector(table);
  r.score = gep_score(r.vector);
  return r;
}

GepResult occupation_distance(const FrequencyTable& base, int base_row,
                              const FrequencyTable& gendered, int gendered_row,
                              const std::vector<std::string>& attributes) {
  if (base.source() != gendered.source()) {
    throw DataError("occupation distance between tables of different sources");
  }
  GepResult r;
  r.label = gendered.label;
  r.setting = gendered.setting();
  r.source = gendered.source();
  r.attributes = attributes;
  for (const auto& id : attributes) {
    std::size_t jb = 0, jg = 0;
    try {
      jb = base.attribute_index(id);
      jg = gendered.attribute_index(id);
    } catch (const DataError&) {
      throw DataError(fmt::format("attribute '{}' missing from one of the tables", id));
    }
    r.vector.push_back(base.value(base_row, jb) - gendered.value(gendered_row, jg));
  }
  r.score = gep_score(r.vector);
  return r;
}

namespace {

struct Headed {
  std::map<std::string, std::string> keys;
  std::vector<std::vector<std::string>> rows;
};

// "# key=value" comments, one column-header line, then tab-separated rows.
Headed parse_headed(std::string_view text, std::string_view format,
                    std::size_t columns) {
  Headed h;
  bool saw_format = false, saw_header = false;
  for (const auto& raw : split_lines(text)) {
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view body = trim(line.substr(1));
      if (body == format) {
        saw_format = true;
      } else if (auto eq = body.find('='); eq != std::string_view::npos) {
        h.keys[std::string(trim(body.substr(0, eq)))] = std::string(trim(body.substr(eq + 1)));
      }
      continue;
    }
    if (!saw_header) {
      saw_header = true;
      continue;
    }
    auto fields = split(line, '\t');
    if (fields.size() != columns) {
      throw DataError(fmt::format("{} row needs {} fields: '{}'", format, columns, line));
    }
    h.rows.push_back(std::move(fields));
  }
  if (!saw_format) throw DataError(fmt::format("not a {} file", format));
  return h;
}

std::string key_or(const Headed& h, const std::string& key, std::string fallback) {
  auto it = h.keys.find(key);
  return it == h.keys.end() ? std::move(fallback) : it->second;
}

}  // namespace

std::string format_frequency_table(const FrequencyTable& table,
                                   const std::vector<std::string>& preamble) {
  std::string out = "# gepfreq/1\n";
  out += fmt::format("# label={}\n# setting={}\n# source={}\n# genders={}\n",
                     table.label, to_string(table.setting()), to_string(table.source()),
                     table.gender_count());
  for (const auto& line : preamble) out += line + "\n";
  out += "attribute\tgender_index\tvalue\tpositives\tz\n";
  for (std::size_t j = 0; j < table.attributes().size(); ++j) {
    for (int g = 1; g <= table.gender_count(); ++g) {
      auto k = table.positives(g, j);
      auto z = table.group_size(g, j);
      out += fmt::format("{}\t{}\t{}\t{}\t{}\n", table.attributes()[j], g,
                         format_real(table.value(g, j)),
                         k ? std::to_string(*k) : "-", z ? std::to_string(*z) : "-");
    }
  }
  return out;
}

FrequencyTable parse_frequency_table(std::string_view text) {
  Headed h = parse_headed(text, "gepfreq/1", 5);
  const int genders = static_cast<int>(parse_int(key_or(h, "genders", "2"), "genders"));
  std::vector<std::string> attributes;
  for (const auto& row : h.rows) {
    if (std::find(attributes.begin(), attributes.end(), row[0]) == attributes.end()) {
      attributes.push_back(row[0]);
    }
  }
  FrequencyTable table(parse_setting(key_or(h, "setting", "neutral")),
                       parse_frequency_source(key_or(h, "source", "human")), attributes,
                       genders);
  table.label = key_or(h, "label", "");
  std::vector<bool> filled(attributes.size() * static_cast<std::size_t>(genders), false);
  for (const auto& row : h.rows) {
    const std::size_t j = table.attribute_index(row[0]);
    const int g = static_cast<int>(parse_int(row[1], "gender_index"));
    if (g < 1 || g > genders) {
      throw DataError(fmt::format("gender index {} outside 1..{}", g, genders));
    }
    if (row[3] != "-" && row[4] != "-") {
      table.set_counts(g, j, static_cast<std::size_t>(parse_int(row[3], "positives")),
                       static_cast<std::size_t>(parse_int(row[4], "z")));
    } else {
      const auto z = row[4] == "-" ? 0 : parse_int(row[4], "z");
      table.set_value(g, j, parse_real(row[2], "value"), static_cast<std::size_t>(z));
    }
    filled[static_cast<std::size_t>(g - 1) * attributes.size() + j] = true;
  }
  for (bool f : filled) {
    if (!f) throw DataError("frequency table is missing (gender, attribute) cells");
  }
  return table;
}

std::string format_gep_result(const GepResult& result,
                              const std::vector<std::string>& preamble) {
  std::string out = "# gepresult/1\n";
  out += fmt::format("# label={}\n# setting={}\n# source={}\n# n={}\n# score={}\n",
                     result.label, to_string(result.setting), to_string(result.source),
                     result.vector.size(), format_real(result.score));
  for (const auto& line : preamble) out += line + "\n";
  out += "attribute\tv\n";
  for (std::size_t j = 0; j < result.vector.size(); ++j) {
    out += fmt::format("{}\t{}\n", result.attributes[j], format_real(result.vector[j]));
  }
  return out;
}

GepResult parse_gep_result(std::string_view text) {
  Headed h = parse_headed(text, "gepresult/1", 2);
  GepResult r;
  r.label = key_or(h, "label", "");
  r.setting = parse_setting(key_or(h, "setting", "neutral"));
  r.source = parse_frequency_source(key_or(h, "source", "human"));
  for (const auto& row : h.rows) {
    r.attributes.push_back(row[0]);
    r.vector.push_back(parse_real(row[1], "v"));
  }
  r.score = gep_score(r.vector);
  return r;
}

}  // namespace gepkit
