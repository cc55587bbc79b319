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

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gepkit {

// Kendall's tau-b with tie correction, O(n log n), exact integer pair counts.
// Throws DegenerateError when either input is entirely tied (or n < 2).
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

// Matthews correlation after mapping values >= 0 to +1 and < 0 to -1.
// Returns 0 when the denominator vanishes.
double mcc_signs(std::span<const double> x, std::span<const double> y);

// Product-moment correlation. Throws DegenerateError on zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

// Area under the ROC curve as the Mann-Whitney statistic, ties counted 1/2.
// labels are 0/1. Throws DegenerateError when only one class is present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// 1 iff more than half of the votes are 1. Throws DataError on an even count.
int majority_vote(std::span<const int> votes);

// Krippendorff's alpha with the nominal metric over an items x raters matrix;
// std::nullopt marks a missing rating. Items with fewer than two ratings are
// not pairable and are skipped.
double krippendorff_alpha(const std::vector<std::vector<std::optional<int>>>& ratings);

enum class PairStratum {
  kSameAttributeSameModel,
  kDiffAttributeSameModel,
  kSameAttributeDiffModel,
  kDiffAttributeDiffModel,
};

inline constexpr std::array<PairStratum, 4> kAllStrata = {
    PairStratum::kSameAttributeSameModel, PairStratum::kDiffAttributeSameModel,
    PairStratum::kSameAttributeDiffModel, PairStratum::kDiffAttributeDiffModel};

const char* to_string(PairStratum stratum);

struct TaggedPair {
  std::string attribute_id;
  std::string model_tag;
  double predicted = 0.0;
  double reference = 0.0;
};

// tau-b restricted to example pairs of one stratum. Throws DegenerateError if
// the stratum holds no pairs or is entirely tied on either side.
double stratified_tau(std::span<const TaggedPair> examples, PairStratum stratum);

struct CorrelationReport {
  double tau_b = 0.0;
  double mcc = 0.0;
  double pearson = 0.0;
  std::size_t n_examples = 0;
  std::array<std::optional<double>, 4> stratified_tau;  // indexed like kAllStrata
};

// tau-b, MCC and Pearson of predicted against reference.
CorrelationReport correlate(std::span<const double> predicted,
                            std::span<const double> reference);

// Fills the strata that have pairs; leaves the rest empty.
void add_stratified(CorrelationReport& report, std::span<const TaggedPair> examples);

// "0.499/0.167"
std::string tau_mcc_cell(const CorrelationReport& report);

std::string format_correlation_report(const CorrelationReport& report,
                                      const std::vector<std::string>& preamble = {});
CorrelationReport parse_correlation_report(std::string_view text);

}  // namespace gepkit
