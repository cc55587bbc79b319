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

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gepkit/embed_store.hpp"
#include "gepkit/estimators.hpp"
#include "gepkit/prompt_forge.hpp"

namespace gepkit {

enum class FrequencySource { kHuman, kSimilarity, kCalibrated, kClassifier };

const char* to_string(FrequencySource source);
FrequencySource parse_frequency_source(std::string_view name);
FrequencySource source_of(Estimator estimator);

// Three (or any odd number of) worker votes for one (image, attribute) pair.
struct AnnotationRecord {
  std::string image_id;
  std::string attribute_id;
  std::vector<int> worker_labels;

  int resolved_label() const;
};

// Line-delimited JSON: {"image_id": .., "attribute_id": .., "votes": [1,0,1]}.
std::vector<AnnotationRecord> parse_annotations(std::string_view text);

// f[gender][attribute] for one setting and one frequency source. Human
// tables also keep the integer counts each frequency was divided from.
class FrequencyTable {
 public:
  FrequencyTable(Setting setting, FrequencySource source,
                 std::vector<std::string> attributes, int gender_count);

  Setting setting() const { return setting_; }
  FrequencySource source() const { return source_; }
  const std::vector<std::string>& attributes() const { return attributes_; }
  int gender_count() const { return gender_count_; }
  std::size_t attribute_index(std::string_view id) const;

  // gender is 1-based, attribute is an index into attributes().
  double value(int gender, std::size_t attribute) const;
  std::optional<std::size_t> positives(int gender, std::size_t attribute) const;
  std::optional<std::size_t> group_size(int gender, std::size_t attribute) const;

  void set_value(int gender, std::size_t attribute, double value,
                 std::size_t group_size = 0);
  // Exact frequency positives / group_size.
  void set_counts(int gender, std::size_t attribute, std::size_t positives,
                  std::size_t group_size);

  std::string label;  // free-form model tag

 private:
  std::size_t cell(int gender, std::size_t attribute) const;

  Setting setting_;
  FrequencySource source_;
  std::vector<std::string> attributes_;
  int gender_count_;
  std::vector<double> values_;
  std::vector<std::optional<std::size_t>> positives_;
  std::vector<std::optional<std::size_t>> sizes_;
};

struct GepResult {
  std::string label;
  Setting setting = Setting::kNeutral;
  FrequencySource source = FrequencySource::kHuman;
  std::vector<std::string> attributes;
  std::vector<double> vector;
  double score = 0.0;
};

// Exact-count frequencies. Neutral images need a label for every attribute;
// explicit images need a label only for the attribute in their prompt.
FrequencyTable frequency_from_annotations(
    std::span<const AnnotationRecord> annotations, const EmbeddingStore& store,
    Setting setting, const std::vector<std::string>& attributes, int gender_count,
    const std::optional<std::string>& model_tag = std::nullopt);

FrequencyTable frequency_from_estimates(const EstimateReport& report,
                                        Setting setting,
                                        const std::vector<std::string>& attributes,
                                        int gender_count);

// v_j = f[1][j] - f[2][j], in attribute order. Uses the integer counts when
// both cells carry them.
std::vector<double> gep_vector(const FrequencyTable& table);

// Mean absolute entry. Throws DegenerateError on an empty vector.
double gep_score(std::span<const double> v);

GepResult compute_gep(const FrequencyTable& table);

// GEP between one row of a gender-unspecified table and one row of a
// gendered table over the named attributes; lower means closer.
GepResult occupation_distance(const FrequencyTable& base, int base_row,
                              const FrequencyTable& gendered, int gendered_row,
                              const std::vector<std::string>& attributes);

// Long-format text tables; see docs/formats.md.
std::string format_frequency_table(const FrequencyTable& table,
                                   const std::vector<std::string>& preamble = {});
FrequencyTable parse_frequency_table(std::string_view text);

std::string format_gep_result(const GepResult& result,
                              const std::vector<std::string>& preamble = {});
GepResult parse_gep_result(std::string_view text);

}  // namespace gepkit
