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

#include <span>
#include <string>
#include <vector>

#include "gepkit/embed_store.hpp"
#include "gepkit/prompt_forge.hpp"

namespace gepkit {

enum class Estimator { kSimilarity, kCalibrated, kClassifier };

const char* to_string(Estimator estimator);
Estimator parse_estimator(std::string_view name);

// dot(u, v) / (|u| |v|), accumulated in double. Throws DataError on a
// zero-norm input or a length mismatch.
double cosine(std::span<const float> u, std::span<const float> v);

// Unit-length copy in double precision.
std::vector<double> l2_normalized(std::span<const float> v);

// Per-image cos(image, text).
std::vector<double> similarity_scores(const ImageGroup& group,
                                      std::span<const float> text,
                                      const EmbeddingStore& store);

// Per-image cos(image, text) - cos(image, reference).
std::vector<double> calibrated_scores(const ImageGroup& group,
                                      std::span<const float> text,
                                      std::span<const float> reference,
                                      const EmbeddingStore& store);

// Mean cosine between the group and the attribute's query phrase.
double similarity_freq(const ImageGroup& group, const AttributeSpec& attribute,
                       const EmbeddingStore& store);

// Mean of cos(image, query phrase) - cos(image, calibration reference).
double calibrated_freq(const ImageGroup& group, const AttributeSpec& attribute,
                       const EmbeddingStore& store);

// multiplier * mean over the group of max(0, cos(image, prompt)).
double clipscore(std::span<const float> prompt_text, const ImageGroup& group,
                 const EmbeddingStore& store, double multiplier = 100.0);

struct LabeledScore {
  double score = 0.0;
  int gender_index = 1;  // 1 or 2
  bool present = false;  // annotated attribute existence
};

// (mean present score for gender 1 - mean present score for gender 2) /
// (mean present score - mean absent score). Smaller magnitude means the
// estimator tracks the attribute rather than the gender.
double separability_ratio(std::span<const LabeledScore> scores);

double mean(std::span<const double> values);

// One row per (gender, attribute) cell for one setting.
struct EstimateRow {
  Setting setting = Setting::kNeutral;
  int gender_index = 1;
  std::string attribute_id;
  double value = 0.0;
  std::size_t z = 0;
};

struct ImageScore {
  std::string image_id;
  std::string attribute_id;
  double score = 0.0;
};

struct EstimateReport {
  Estimator estimator = Estimator::kSimilarity;
  std::vector<EstimateRow> rows;
  std::vector<ImageScore> image_scores;
};

// Tab-separated table; `preamble` lines are emitted verbatim after the
// format line and must start with '#'.
std::string format_estimate_report(const EstimateReport& report,
                                   const std::vector<std::string>& preamble = {});
EstimateReport parse_estimate_report(std::string_view text);
std::string format_image_scores(const EstimateReport& report,
                                const std::vector<std::string>& preamble = {});

}  // namespace gepkit
