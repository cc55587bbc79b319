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
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gepkit/embed_store.hpp"
#include "gepkit/gep.hpp"
#include "gepkit/stats.hpp"

namespace gepkit {

inline constexpr std::string_view kArtificialFormat = "gepart/1";

struct DifferenceScale {
  double scale = 1.0;

  // scale * {-0.9, ..., -0.1, 0.1, ..., 0.9}, ascending.
  std::vector<double> grid() const;
};

// 1.0, 0.5, 0.25, 0.125.
std::vector<DifferenceScale> default_scales();

struct ArtificialTarget {
  std::string attribute_id;
  double scale = 1.0;
  double target = 0.0;
};

// For each attribute, then each scale, per_scale draws from the scale's grid
// with replacement.
std::vector<ArtificialTarget> sample_targets(std::span<const DifferenceScale> scales,
                                             std::size_t per_scale,
                                             const std::vector<std::string>& attributes,
                                             std::uint64_t seed);

// Annotated images for one attribute, split by resolved label.
struct AttributePool {
  std::string attribute_id;
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
};

std::vector<AttributePool> pools_from_annotations(
    std::span<const AnnotationRecord> annotations,
    const std::vector<std::string>& attributes);

struct ArtificialExample {
  std::string attribute_id;
  std::string model_tag;
  double scale = 1.0;
  double target_diff = 0.0;
  std::vector<std::string> group_a;
  std::vector<std::string> group_b;
  std::size_t positives_a = 0;
  std::size_t positives_b = 0;
  double realized_diff = 0.0;
  std::size_t z = 0;
};

// Integer d with d / z nearest to target; exact halves go to the smaller d.
long long nearest_difference_count(double target, std::size_t z);

// Two disjoint groups of z images whose positive counts differ by
// nearest_difference_count(target, z). The lower count is drawn uniformly from
// the levels the pool can fill. Throws DataError when no level fits.
ArtificialExample assemble_example(const AttributePool& pool, double target,
                                   std::size_t z, std::uint64_t seed);

struct SkippedTarget {
  std::string attribute_id;
  double target = 0.0;
  std::string reason;
};

struct ArtificialDataset {
  std::size_t z = 0;
  std::uint64_t seed = 0;
  std::vector<ArtificialExample> examples;
  std::vector<SkippedTarget> skipped;
};

// sample_targets followed by assemble_example per target. Unrealizable targets
// are skipped and recorded; more than half skipped throws DataError.
ArtificialDataset build_dataset(const std::vector<AttributePool>& pools,
                                std::span<const DifferenceScale> scales,
                                std::size_t per_scale, std::size_t z,
                                std::uint64_t seed,
                                const std::string& model_tag = "");

// Frequency estimate of one attribute over one image group.
using GroupEstimate =
    std::function<double(const std::string& attribute_id, const ImageGroup& group)>;

// Correlates estimate(group_a) - estimate(group_b) with realized_diff.
CorrelationReport evaluate_on_dataset(const ArtificialDataset& dataset,
                                      const GroupEstimate& estimate,
                                      const EmbeddingStore& store,
                                      bool stratified = false);

// Line-delimited JSON: one header object, then one object per example.
// Extra header fields are written as strings after the fixed ones.
std::string format_dataset(
    const ArtificialDataset& dataset,
    const std::vector<std::pair<std::string, std::string>>& header_fields = {});
ArtificialDataset parse_dataset(std::string_view text);

}  // namespace gepkit
